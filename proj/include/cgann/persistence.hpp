#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "conjugate_graph.hpp"
#include "io.hpp"
#include "proximity_graph.hpp"

namespace cgann {

/// Self-contained index file: proximity graph, conjugate graph, entry
/// point, and an echo of the build parameters, in one checksummed
/// little-endian payload. Enhancement rewrites the same file in place
/// (atomically), so the index carries its whole lifecycle.
struct IndexFile {
    static constexpr std::array<char, 4> kMagic{'E', 'G', 'R', 'F'};
    static constexpr std::uint32_t kVersion = 1;

    Metric metric{Metric::euclidean};
    std::uint32_t n{0};
    std::uint32_t dim{0};
    BuildParams build_params;
    std::uint64_t seed{0};
    std::uint64_t timestamp{0};  // write time, not covered by the checksum

    ProximityGraph graph;
    ConjugateGraph conj;
};

namespace detail {

inline std::uint32_t
crc32(const char* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int b = 0; b < 8; ++b) {
                c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            }
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) {
        crc = table[(crc ^ static_cast<unsigned char>(data[i])) & 0xFFu] ^ (crc >> 8);
    }
    return crc ^ 0xFFFFFFFFu;
}

struct PayloadWriter {
    std::string bytes;

    template <typename T>
    void
    put(T v) {
        static_assert(std::is_trivially_copyable_v<T>);
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        bytes.append(buf, sizeof(T));
    }
};

struct PayloadReader {
    const std::string& bytes;
    std::size_t pos{0};

    template <typename T>
    T
    get() {
        static_assert(std::is_trivially_copyable_v<T>);
        if (pos + sizeof(T) > bytes.size()) {
            throw DataError("index payload truncated at byte " + std::to_string(pos));
        }
        T v;
        std::memcpy(&v, bytes.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
};

}  // namespace detail

inline std::string
serialize_index_payload(const IndexFile& index) {
    detail::PayloadWriter w;
    w.put<std::uint8_t>(static_cast<std::uint8_t>(index.metric));
    w.put<std::uint32_t>(index.n);
    w.put<std::uint32_t>(index.dim);
    w.put<std::uint32_t>(index.graph.max_degree);
    w.put<std::uint32_t>(index.graph.entry_point);
    w.put<std::uint32_t>(index.build_params.build_beam);
    w.put<float>(index.build_params.alpha);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(index.build_params.prune_rule));
    w.put<std::uint64_t>(index.seed);
    w.put<std::uint32_t>(index.conj.construction_cap);
    w.put<std::uint32_t>(index.conj.routing_cap);
    for (const auto& adj : index.graph.adjacency) {
        w.put<std::uint32_t>(static_cast<std::uint32_t>(adj.size()));
        for (VectorId v : adj) {
            w.put<std::uint32_t>(v);
        }
    }
    for (const auto& edges : index.conj.construction_edges) {
        w.put<std::uint32_t>(static_cast<std::uint32_t>(edges.size()));
        for (VectorId v : edges) {
            w.put<std::uint32_t>(v);
        }
    }
    for (const auto& edges : index.conj.routing_edges) {
        w.put<std::uint32_t>(static_cast<std::uint32_t>(edges.size()));
        for (const RoutingEdge& e : edges) {
            w.put<std::uint32_t>(e.target);
            w.put<std::uint8_t>(static_cast<std::uint8_t>(e.source));
        }
    }
    return w.bytes;
}

inline void
save_index(const IndexFile& index, const std::string& path) {
    std::string payload = serialize_index_payload(index);
    detail::PayloadWriter header;
    header.bytes.append(IndexFile::kMagic.data(), IndexFile::kMagic.size());
    header.put<std::uint32_t>(IndexFile::kVersion);
    header.put<std::uint64_t>(index.timestamp != 0
                                  ? index.timestamp
                                  : static_cast<std::uint64_t>(std::time(nullptr)));
    header.put<std::uint32_t>(detail::crc32(payload.data(), payload.size()));
    header.put<std::uint64_t>(payload.size());
    write_file_atomic(path, header.bytes + payload);
}

inline IndexFile
load_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open index file " + path);
    }
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    constexpr std::size_t header_size = 4 + 4 + 8 + 4 + 8;
    if (raw.size() < header_size) {
        throw DataError(path + ": too short to be an index file");
    }
    if (std::memcmp(raw.data(), IndexFile::kMagic.data(), IndexFile::kMagic.size()) != 0) {
        throw DataError(path + ": bad magic");
    }
    detail::PayloadReader hdr{raw, 4};
    const auto version = hdr.get<std::uint32_t>();
    if (version != IndexFile::kVersion) {
        throw DataError(path + ": unsupported index version " + std::to_string(version));
    }
    IndexFile index;
    index.timestamp = hdr.get<std::uint64_t>();
    const auto crc = hdr.get<std::uint32_t>();
    const auto payload_size = hdr.get<std::uint64_t>();
    if (raw.size() != header_size + payload_size) {
        throw DataError(path + ": payload size mismatch (header says " +
                        std::to_string(payload_size) + ", file holds " +
                        std::to_string(raw.size() - header_size) + ")");
    }
    const std::string payload = raw.substr(header_size);
    if (detail::crc32(payload.data(), payload.size()) != crc) {
        throw DataError(path + ": checksum mismatch, refusing to load");
    }

    detail::PayloadReader r{payload, 0};
    index.metric = static_cast<Metric>(r.get<std::uint8_t>());
    index.n = r.get<std::uint32_t>();
    index.dim = r.get<std::uint32_t>();
    index.graph.max_degree = r.get<std::uint32_t>();
    index.graph.entry_point = r.get<std::uint32_t>();
    index.build_params.max_degree = index.graph.max_degree;
    index.build_params.build_beam = r.get<std::uint32_t>();
    index.build_params.alpha = r.get<float>();
    index.build_params.prune_rule = static_cast<PruneRule>(r.get<std::uint8_t>());
    index.seed = r.get<std::uint64_t>();
    index.conj.construction_cap = r.get<std::uint32_t>();
    index.conj.routing_cap = r.get<std::uint32_t>();

    auto read_id = [&](const char* what) {
        auto v = r.get<std::uint32_t>();
        if (v >= index.n) {
            throw DataError(path + ": " + what + " id " + std::to_string(v) + " out of range");
        }
        return v;
    };

    index.graph.adjacency.resize(index.n);
    for (std::uint32_t i = 0; i < index.n; ++i) {
        auto cnt = r.get<std::uint32_t>();
        index.graph.adjacency[i].reserve(cnt);
        for (std::uint32_t j = 0; j < cnt; ++j) {
            index.graph.adjacency[i].push_back(read_id("adjacency"));
        }
    }
    index.conj.construction_edges.resize(index.n);
    for (std::uint32_t i = 0; i < index.n; ++i) {
        auto cnt = r.get<std::uint32_t>();
        index.conj.construction_edges[i].reserve(cnt);
        for (std::uint32_t j = 0; j < cnt; ++j) {
            index.conj.construction_edges[i].push_back(read_id("construction edge"));
        }
    }
    index.conj.routing_edges.resize(index.n);
    for (std::uint32_t i = 0; i < index.n; ++i) {
        auto cnt = r.get<std::uint32_t>();
        index.conj.routing_edges[i].reserve(cnt);
        for (std::uint32_t j = 0; j < cnt; ++j) {
            RoutingEdge e;
            e.target = read_id("routing edge");
            auto tag = r.get<std::uint8_t>();
            if (tag > 2) {
                throw DataError(path + ": bad edge provenance tag " + std::to_string(tag));
            }
            e.source = static_cast<EdgeSource>(tag);
            index.conj.routing_edges[i].push_back(e);
        }
    }
    if (r.pos != payload.size()) {
        throw DataError(path + ": trailing bytes after payload");
    }
    if (index.n > 0 && index.graph.entry_point >= index.n) {
        throw DataError(path + ": entry point out of range");
    }
    return index;
}

/// Byte counts of the serialized sections, for reporting and for sanity
/// checks against the file on disk.
struct IndexSizes {
    std::size_t header{0};
    std::size_t params{0};
    std::size_t adjacency{0};
    std::size_t construction{0};
    std::size_t routing{0};

    std::size_t
    total() const {
        return header + params + adjacency + construction + routing;
    }
};

inline IndexSizes
index_sizes(const IndexFile& index) {
    IndexSizes s;
    s.header = 4 + 4 + 8 + 4 + 8;
    s.params = 1 + 4 + 4 + 4 + 4 + 4 + 4 + 1 + 8 + 4 + 4;
    for (const auto& adj : index.graph.adjacency) {
        s.adjacency += 4 + 4 * adj.size();
    }
    for (const auto& edges : index.conj.construction_edges) {
        s.construction += 4 + 4 * edges.size();
    }
    for (const auto& edges : index.conj.routing_edges) {
        s.routing += 4 + 5 * edges.size();
    }
    return s;
}

/// One search-log line:
///   Q <d floats> | L2 <int> | LOPT <id> | GOPT <id>
/// whitespace-delimited, one record per line. Plain text keeps the feedback
/// channel auditable.
inline std::vector<SearchLogEntry>
parse_search_log(std::istream& in, std::size_t expected_dim, const std::string& name) {
    std::vector<SearchLogEntry> entries;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        auto fail = [&](const std::string& why) -> void {
            throw DataError(name + ":" + std::to_string(lineno) + ": " + why);
        };
        std::istringstream ss(line);
        std::string tok;
        if (!(ss >> tok) || tok != "Q") {
            fail("expected 'Q'");
        }
        SearchLogEntry entry;
        while (ss >> tok && tok != "|") {
            try {
                entry.query.push_back(std::stof(tok));
            } catch (const std::exception&) {
                fail("bad query component '" + tok + "'");
            }
        }
        if (entry.query.size() != expected_dim) {
            fail("query has " + std::to_string(entry.query.size()) + " components, expected " +
                 std::to_string(expected_dim));
        }
        auto field = [&](const char* key) -> long long {
            std::string k;
            if (!(ss >> k) || k != key) {
                fail(std::string("expected '") + key + "'");
            }
            long long v = 0;
            if (!(ss >> v) || v < 0) {
                fail(std::string("bad value for ") + key);
            }
            std::string sep;
            ss >> sep;  // trailing '|' or end of line
            return v;
        };
        entry.beam_width = static_cast<std::uint32_t>(field("L2"));
        entry.local_opt = static_cast<VectorId>(field("LOPT"));
        entry.global_opt = static_cast<VectorId>(field("GOPT"));
        entries.push_back(std::move(entry));
    }
    return entries;
}

inline std::vector<SearchLogEntry>
load_search_log(const std::string& path, std::size_t expected_dim) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open search log " + path);
    }
    return parse_search_log(in, expected_dim, path);
}

inline void
write_search_log(std::ostream& out, std::span<const SearchLogEntry> entries) {
    out.precision(9);
    for (const SearchLogEntry& e : entries) {
        out << "Q";
        for (float v : e.query) {
            out << ' ' << v;
        }
        out << " | L2 " << e.beam_width << " | LOPT " << e.local_opt << " | GOPT " << e.global_opt
            << '\n';
    }
}

}  // namespace cgann
