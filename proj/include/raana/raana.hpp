#pragma once

#include "raana/allocator.hpp"
#include "raana/calibration.hpp"
#include "raana/core.hpp"
#include "raana/hadamard.hpp"
#include "raana/model_file.hpp"
#include "raana/quantizer.hpp"
#include "raana/rabitq_h.hpp"
#include "raana/tensor_archive.hpp"
#include "raana/transforms.hpp"
