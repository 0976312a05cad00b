#pragma once
// Append-only log framing. One record per write:
//   [u32 length][u32 crc32][payload bytes]   (little-endian)
// Payload is the canonical JSON of an Envelope. A torn final record is
// dropped on replay; a bad record with intact data after it is corruption.

#include "w5cat/core.hpp"
#include "w5cat/errors.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace w5cat {

// ---------------------------------------------------------------------------
// CRC-32 (IEEE, reflected, poly 0xEDB88320).
// ---------------------------------------------------------------------------

namespace detail {

inline const std::array<uint32_t, 256>& crc32_table() {
    static const std::array<uint32_t, 256> table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int bit = 0; bit < 8; ++bit) {
                c = (c & 1) ? (0xEDB88320u ^ (c >> 1)) : (c >> 1);
            }
            t[i] = c;
        }
        return t;
    }();
    return table;
}

} // namespace detail

inline uint32_t crc32(const void* data, size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    uint32_t c = 0xFFFFFFFFu;
    for (size_t i = 0; i < len; ++i) {
        c = detail::crc32_table()[(c ^ bytes[i]) & 0xFF] ^ (c >> 8);
    }
    return c ^ 0xFFFFFFFFu;
}

inline uint32_t crc32(const std::string& s) { return crc32(s.data(), s.size()); }

// ---------------------------------------------------------------------------
// Log records.
// ---------------------------------------------------------------------------

using LogPayload = std::variant<AssetRegistration, MetadataItem, RelationshipRecord, ReadAudit>;

struct Envelope {
    uint64_t seq = 0;
    LogPayload payload;
};

inline Value to_json(const Envelope& env) {
    Value j;
    j["seq"] = env.seq;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, AssetRegistration>) {
                j["type"] = "asset";
                j["body"] = to_json(p);
            } else if constexpr (std::is_same_v<T, MetadataItem>) {
                j["type"] = "mi";
                j["body"] = to_json(p);
            } else if constexpr (std::is_same_v<T, RelationshipRecord>) {
                j["type"] = "rel";
                j["body"] = to_json(p);
            } else {
                j["type"] = "get";
                j["body"] = to_json(p.audit);
            }
        },
        env.payload);
    return j;
}

inline Envelope envelope_from_json(const Value& j) {
    Envelope env;
    env.seq = j.at("seq").get<uint64_t>();
    const std::string type = j.at("type").get<std::string>();
    const Value& body = j.at("body");
    if (type == "asset") {
        env.payload = registration_from_json(body);
    } else if (type == "mi") {
        env.payload = item_from_json(body);
    } else if (type == "rel") {
        env.payload = relationship_from_json(body);
    } else if (type == "get") {
        env.payload = ReadAudit{audit_from_json(body)};
    } else {
        throw Error(Errc::corrupt_record, "unknown log record type '" + type + "'");
    }
    return env;
}

inline std::string encode_frame(const Envelope& env) {
    const std::string payload = canonical_text(to_json(env));
    const uint32_t len = static_cast<uint32_t>(payload.size());
    const uint32_t crc = crc32(payload);
    std::string frame(8 + payload.size(), '\0');
    std::memcpy(frame.data(), &len, 4);      // little-endian on all supported targets
    std::memcpy(frame.data() + 4, &crc, 4);
    std::memcpy(frame.data() + 8, payload.data(), payload.size());
    return frame;
}

struct DecodedLog {
    std::vector<Envelope> records;
    bool torn_tail = false;      // a final partial/garbled record was dropped
};

// Decodes a full log image. Mid-log damage throws CorruptRecord; damage that
// runs to end-of-data is a torn tail and only drops the last record.
inline DecodedLog decode_log(const std::string& bytes) {
    DecodedLog out;
    size_t pos = 0;
    const size_t size = bytes.size();
    while (pos < size) {
        if (size - pos < 8) {
            out.torn_tail = true;   // truncated header at EOF
            break;
        }
        uint32_t len = 0;
        uint32_t crc = 0;
        std::memcpy(&len, bytes.data() + pos, 4);
        std::memcpy(&crc, bytes.data() + pos + 4, 4);
        if (size - pos - 8 < len) {
            out.torn_tail = true;   // truncated body at EOF
            break;
        }
        const char* payload = bytes.data() + pos + 8;
        const bool last_frame = (pos + 8 + len == size);
        if (crc32(payload, len) != crc) {
            if (last_frame) {
                out.torn_tail = true;
                break;
            }
            throw Error(Errc::corrupt_record,
                        "checksum mismatch at byte offset " + std::to_string(pos));
        }
        Value j = Value::parse(std::string_view(payload, len), nullptr, false);
        if (j.is_discarded()) {
            if (last_frame) {
                out.torn_tail = true;
                break;
            }
            throw Error(Errc::corrupt_record,
                        "unparseable payload at byte offset " + std::to_string(pos));
        }
        out.records.push_back(envelope_from_json(j));
        pos += 8 + len;
    }
    return out;
}

} // namespace w5cat
