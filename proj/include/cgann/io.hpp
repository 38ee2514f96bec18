#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dataset.hpp"

namespace cgann {

/// File or payload problem: missing/truncated/inconsistent input data.
/// Distinct from std::invalid_argument so the CLI can map it to its own
/// exit code.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class FileFormat : std::uint8_t {
    fvecs = 0,
    ivecs = 1,
    csv = 2,
};

inline FileFormat
format_from_string(const std::string& name) {
    if (name == "fvecs") {
        return FileFormat::fvecs;
    }
    if (name == "ivecs") {
        return FileFormat::ivecs;
    }
    if (name == "csv") {
        return FileFormat::csv;
    }
    throw std::invalid_argument("unknown file format: " + name);
}

namespace detail {

// Repeated little-endian records of [int32 dim][dim * 4-byte payload].
// Returns one flat row per record; all records must agree on dim.
template <typename T>
std::vector<std::vector<T>>
read_xvecs(const std::string& path) {
    static_assert(sizeof(T) == 4);
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    std::vector<std::vector<T>> rows;
    std::uint64_t offset = 0;
    std::int32_t dim = -1;
    for (;;) {
        std::int32_t d = 0;
        in.read(reinterpret_cast<char*>(&d), sizeof(d));
        if (in.gcount() == 0 && in.eof()) {
            break;
        }
        if (in.gcount() != sizeof(d)) {
            throw DataError(path + ": truncated record header at byte " + std::to_string(offset));
        }
        if (d <= 0) {
            throw DataError(path + ": non-positive dimension " + std::to_string(d) + " at byte " +
                            std::to_string(offset));
        }
        if (dim < 0) {
            dim = d;
        } else if (d != dim) {
            throw DataError(path + ": record " + std::to_string(rows.size()) + " has dimension " +
                            std::to_string(d) + ", expected " + std::to_string(dim) +
                            " (at byte " + std::to_string(offset) + ")");
        }
        offset += sizeof(d);
        std::vector<T> row(static_cast<std::size_t>(d));
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(sizeof(T)) * d);
        if (in.gcount() != static_cast<std::streamsize>(sizeof(T)) * d) {
            throw DataError(path + ": truncated record payload at byte " + std::to_string(offset));
        }
        offset += static_cast<std::uint64_t>(sizeof(T)) * static_cast<std::uint64_t>(d);
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename T>
void
write_xvecs(const std::string& path, const std::vector<std::vector<T>>& rows) {
    static_assert(sizeof(T) == 4);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open " + path + " for writing");
    }
    for (const auto& row : rows) {
        auto d = static_cast<std::int32_t>(row.size());
        out.write(reinterpret_cast<const char*>(&d), sizeof(d));
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(sizeof(T)) * d);
    }
    if (!out) {
        throw DataError("short write to " + path);
    }
}

}  // namespace detail

inline std::vector<std::vector<float>>
read_fvecs(const std::string& path) {
    return detail::read_xvecs<float>(path);
}

inline std::vector<std::vector<std::int32_t>>
read_ivecs(const std::string& path) {
    return detail::read_xvecs<std::int32_t>(path);
}

inline void
write_fvecs(const std::string& path, const std::vector<std::vector<float>>& rows) {
    detail::write_xvecs(path, rows);
}

inline void
write_ivecs(const std::string& path, const std::vector<std::vector<std::int32_t>>& rows) {
    detail::write_xvecs(path, rows);
}

/// One vector per line, comma-separated decimal floats.
inline std::vector<std::vector<float>>
read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    std::vector<std::vector<float>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::vector<float> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                float v = std::stof(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) {
                    ++used;
                }
                if (used != cell.size()) {
                    throw std::invalid_argument(cell);
                }
                row.push_back(v);
            } catch (const std::exception&) {
                throw DataError(path + ":" + std::to_string(lineno) + ": bad float '" + cell + "'");
            }
        }
        if (row.empty()) {
            throw DataError(path + ":" + std::to_string(lineno) + ": empty record");
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw DataError(path + ":" + std::to_string(lineno) + ": record has dimension " +
                            std::to_string(row.size()) + ", expected " +
                            std::to_string(rows.front().size()));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void
write_csv(const std::string& path, const std::vector<std::vector<float>>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot open " + path + " for writing");
    }
    out.precision(9);
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) {
                out << ',';
            }
            out << row[i];
        }
        out << '\n';
    }
}

/// Loads a dataset and validates the invariants the index relies on:
/// consistent dimension, finite components, and nonzero norms under the
/// angular metric.
inline Dataset
load_vectors(const std::string& path, FileFormat format, Metric metric) {
    Dataset ds;
    ds.metric = metric;
    std::vector<std::vector<float>> rows;
    switch (format) {
        case FileFormat::fvecs:
            rows = read_fvecs(path);
            break;
        case FileFormat::csv:
            rows = read_csv(path);
            break;
        case FileFormat::ivecs: {
            for (auto& r : detail::read_xvecs<std::int32_t>(path)) {
                std::vector<float> f(r.size());
                for (std::size_t i = 0; i < r.size(); ++i) {
                    f[i] = static_cast<float>(r[i]);
                }
                rows.push_back(std::move(f));
            }
            break;
        }
    }
    if (rows.empty()) {
        throw DataError(path + ": no records");
    }
    ds.dim = rows.front().size();
    ds.values.reserve(rows.size() * ds.dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        bool all_zero = true;
        for (float v : row) {
            if (!std::isfinite(v)) {
                throw DataError(path + ": non-finite component in record " + std::to_string(i));
            }
            all_zero = all_zero && v == 0.0f;
        }
        if (metric == Metric::angular && all_zero) {
            throw DataError(path + ": zero-norm vector in record " + std::to_string(i) +
                            " not representable under angular metric");
        }
        ds.append(row);
    }
    return ds;
}

/// Queries share the dataset container but skip the metric-specific checks.
inline std::vector<std::vector<float>>
load_query_rows(const std::string& path, FileFormat format) {
    switch (format) {
        case FileFormat::fvecs:
            return read_fvecs(path);
        case FileFormat::csv:
            return read_csv(path);
        case FileFormat::ivecs: {
            std::vector<std::vector<float>> rows;
            for (auto& r : detail::read_xvecs<std::int32_t>(path)) {
                std::vector<float> f(r.size());
                for (std::size_t i = 0; i < r.size(); ++i) {
                    f[i] = static_cast<float>(r[i]);
                }
                rows.push_back(std::move(f));
            }
            return rows;
        }
    }
    throw std::invalid_argument("load_query_rows: unknown format");
}

/// Writes bytes to a temporary file in the target directory, then renames
/// over the destination so readers never observe a partial file.
inline void
write_file_atomic(const std::string& path, const std::string& bytes) {
    namespace fs = std::filesystem;
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot open " + tmp.string() + " for writing");
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw DataError("short write to " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        throw DataError("cannot rename " + tmp.string() + " to " + path + ": " + ec.message());
    }
}

}  // namespace cgann
