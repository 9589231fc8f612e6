#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "raana/core.hpp"

namespace raana {

// On-disk container of named dense float32 matrices: a line-oriented text
// manifest ("tensor <name> f32 <rows>x<cols> @<offset>") followed by raw
// little-endian payload, every tensor 64-byte aligned.
class TensorArchive {
public:
    static constexpr std::size_t kAlignment = 64;

    std::vector<std::pair<std::string, Matrix<float>>> tensors;

    void add(std::string name, Matrix<float> tensor) {
        if (name.empty() || name.find_first_of(" \t\n\r@") != std::string::npos)
            throw invalid_config_error("tensor name '" + name + "' is empty or has "
                                       "whitespace or '@'");
        if (find(name))
            throw invalid_config_error("duplicate tensor name '" + name + "'");
        tensors.emplace_back(std::move(name), std::move(tensor));
    }

    const Matrix<float>* find(const std::string& name) const {
        for (const auto& [n, t] : tensors)
            if (n == name) return &t;
        return nullptr;
    }

    void write(const std::string& path) const {
        // Offsets appear inside the manifest, so the manifest length and the
        // offsets are solved together by iterating to a fixed point.
        std::vector<std::size_t> offsets(tensors.size(), 0);
        std::string header;
        for (int pass = 0; pass < 8; ++pass) {
            std::string candidate = render_header(offsets);
            std::size_t cursor = align_up(candidate.size());
            bool stable = true;
            for (std::size_t i = 0; i < tensors.size(); ++i) {
                cursor = align_up(cursor);
                if (offsets[i] != cursor) {
                    offsets[i] = cursor;
                    stable = false;
                }
                cursor += tensors[i].second.size() * sizeof(float);
            }
            if (stable && candidate == render_header(offsets)) {
                header = std::move(candidate);
                break;
            }
            header = render_header(offsets);
        }

        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        if (!os) throw error("cannot open '" + path + "' for writing");
        os.write(header.data(), std::streamsize(header.size()));
        std::size_t written = header.size();
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            while (written < offsets[i]) {
                os.put('\0');
                ++written;
            }
            const auto& m = tensors[i].second;
            os.write(reinterpret_cast<const char*>(m.data()),
                     std::streamsize(m.size() * sizeof(float)));
            written += m.size() * sizeof(float);
        }
        if (!os) throw error("write failed for '" + path + "'");
    }

    static TensorArchive read(const std::string& path) {
        std::ifstream is(path, std::ios::binary);
        if (!is) throw error("cannot open '" + path + "' for reading");
        std::string bytes((std::istreambuf_iterator<char>(is)),
                          std::istreambuf_iterator<char>());

        std::istringstream text(bytes);
        std::string line;
        if (!std::getline(text, line) || line != "tensor-archive v1")
            throw unsupported_format_error("'" + path +
                                           "': missing 'tensor-archive v1' header");

        struct Entry {
            std::string name;
            std::size_t rows, cols, offset;
        };
        std::vector<Entry> entries;
        bool saw_end = false;
        while (std::getline(text, line)) {
            if (line == "end") {
                saw_end = true;
                break;
            }
            std::istringstream ls(line);
            std::string keyword, name, type, shape, at;
            if (!(ls >> keyword >> name >> type >> shape >> at) || keyword != "tensor")
                throw corrupt_data_error("'" + path + "': malformed manifest line: '" +
                                         line + "'");
            if (type != "f32")
                throw unsupported_format_error("'" + path + "': unsupported element type '" +
                                               type + "'");
            const std::size_t x = shape.find('x');
            if (x == std::string::npos || at.size() < 2 || at[0] != '@')
                throw corrupt_data_error("'" + path + "': malformed manifest line: '" +
                                         line + "'");
            Entry e;
            e.name = name;
            try {
                e.rows = std::stoull(shape.substr(0, x));
                e.cols = std::stoull(shape.substr(x + 1));
                e.offset = std::stoull(at.substr(1));
            } catch (const std::exception&) {
                throw corrupt_data_error("'" + path + "': malformed manifest line: '" +
                                         line + "'");
            }
            entries.push_back(std::move(e));
        }
        if (!saw_end)
            throw corrupt_data_error("'" + path + "': manifest missing 'end' terminator");

        // validate spans: aligned, inside the file, pairwise disjoint
        std::vector<std::pair<std::size_t, std::size_t>> spans;
        for (const Entry& e : entries) {
            const std::size_t size = e.rows * e.cols * sizeof(float);
            if (e.offset % kAlignment != 0)
                throw corrupt_data_error("'" + path + "': tensor '" + e.name +
                                         "' offset " + std::to_string(e.offset) +
                                         " not 64-byte aligned");
            if (e.offset + size > bytes.size())
                throw corrupt_data_error("'" + path + "': tensor '" + e.name +
                                         "' spans past end of file (offset " +
                                         std::to_string(e.offset) + ", size " +
                                         std::to_string(size) + ", file " +
                                         std::to_string(bytes.size()) + ")");
            spans.emplace_back(e.offset, e.offset + size);
        }
        std::sort(spans.begin(), spans.end());
        for (std::size_t i = 1; i < spans.size(); ++i)
            if (spans[i].first < spans[i - 1].second)
                throw corrupt_data_error("'" + path + "': overlapping tensor payloads at offset " +
                                         std::to_string(spans[i].first));

        TensorArchive archive;
        for (const Entry& e : entries) {
            Matrix<float> m(e.rows, e.cols);
            std::memcpy(m.data(), bytes.data() + e.offset, m.size() * sizeof(float));
            archive.add(e.name, std::move(m));
        }
        return archive;
    }

private:
    static std::size_t align_up(std::size_t n) {
        return (n + kAlignment - 1) / kAlignment * kAlignment;
    }

    std::string render_header(const std::vector<std::size_t>& offsets) const {
        std::ostringstream os;
        os << "tensor-archive v1\n";
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            const auto& [name, m] = tensors[i];
            os << "tensor " << name << " f32 " << m.rows() << 'x' << m.cols() << " @"
               << offsets[i] << '\n';
        }
        os << "end\n";
        return os.str();
    }
};

}  // namespace raana
