#pragma once
// Domain vocabulary: assets, partitions, metadata items, relationships and
// audit records, plus their validation rules and canonical JSON forms.
// Everything here is an immutable value type.

#include "w5cat/errors.hpp"
#include "w5cat/value.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace w5cat {

// ---------------------------------------------------------------------------
// Partition: closed 7-member set, no catch-all.
// ---------------------------------------------------------------------------

enum class Partition : uint8_t { Who, What, When, Why, Where, How, Relationship };

inline constexpr std::array<Partition, 7> all_partitions = {
    Partition::Who,  Partition::What,  Partition::When, Partition::Why,
    Partition::Where, Partition::How,  Partition::Relationship,
};

inline constexpr std::array<Partition, 6> profile_partitions = {
    Partition::Who,  Partition::What, Partition::When,
    Partition::Why,  Partition::Where, Partition::How,
};

inline std::string_view partition_name(Partition p) {
    switch (p) {
        case Partition::Who:          return "Who";
        case Partition::What:         return "What";
        case Partition::When:         return "When";
        case Partition::Why:          return "Why";
        case Partition::Where:        return "Where";
        case Partition::How:          return "How";
        case Partition::Relationship: return "Relationship";
    }
    return "?";
}

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::optional<Partition> try_parse_partition(std::string_view name) {
    std::string lower = ascii_lower(name);
    for (Partition p : all_partitions) {
        if (lower == ascii_lower(partition_name(p))) return p;
    }
    return std::nullopt;
}

inline Partition parse_partition(std::string_view name) {
    if (auto p = try_parse_partition(name)) return *p;
    throw Error(Errc::unknown_partition,
                "'" + std::string(name) +
                "' is not a partition; expected one of "
                "Who, What, When, Why, Where, How, Relationship");
}

// ---------------------------------------------------------------------------
// AssetId: opaque URI, exact byte identity.
// ---------------------------------------------------------------------------

struct AssetId {
    std::string uri;

    auto operator<=>(const AssetId&) const = default;
};

inline bool asset_id_ok(const AssetId& id) {
    if (id.uri.empty()) return false;
    for (unsigned char c : id.uri) {
        if (c < 0x20 || c == 0x7f) return false;
    }
    return true;
}

inline AssetId make_asset_id(std::string uri) {
    AssetId id{std::move(uri)};
    if (!asset_id_ok(id)) {
        throw Error(Errc::invalid_asset_id,
                    "asset id must be non-empty with no control characters");
    }
    return id;
}

// ---------------------------------------------------------------------------
// Audit records (G3): who / when / what, for every set and get.
// ---------------------------------------------------------------------------

enum class AuditOp : uint8_t { Set, Get, Supersede, Relate };

inline std::string_view audit_op_name(AuditOp op) {
    switch (op) {
        case AuditOp::Set:       return "set";
        case AuditOp::Get:       return "get";
        case AuditOp::Supersede: return "supersede";
        case AuditOp::Relate:    return "relate";
    }
    return "?";
}

inline AuditOp parse_audit_op(std::string_view name) {
    std::string lower = ascii_lower(name);
    if (lower == "set") return AuditOp::Set;
    if (lower == "get") return AuditOp::Get;
    if (lower == "supersede") return AuditOp::Supersede;
    if (lower == "relate") return AuditOp::Relate;
    throw Error(Errc::validation_failure, "unknown audit op '" + std::string(name) + "'");
}

struct AuditRecord {
    std::string actor;
    AuditOp op = AuditOp::Set;
    int64_t timestamp_ns = 0;              // UTC nanoseconds, non-decreasing in seq order
    uint64_t seq = 0;                      // global sequence of the audited record
    std::vector<AssetId> assets;           // subject asset(s); >1 only for relate
    std::optional<Partition> partition;
    std::string key;
    uint64_t version = 0;                  // 0 when not item-scoped
    std::optional<std::string> reason;     // required for supersede

    bool touches(const AssetId& a) const {
        return std::find(assets.begin(), assets.end(), a) != assets.end();
    }
};

// ---------------------------------------------------------------------------
// Metadata items and relationships.
// ---------------------------------------------------------------------------

struct MetadataItem {
    AssetId asset;
    Partition partition = Partition::What;
    std::string key;
    Value value;
    uint64_t version = 0;                      // 1..N per (asset, partition, key)
    uint64_t seq = 0;                          // global order
    std::optional<uint64_t> superseded_by;     // version that corrects this one
    std::optional<uint64_t> supersedes;        // version this one corrects
    AuditRecord audit;
};

struct Endpoint {
    AssetId asset;
    Partition partition = Partition::What;

    auto operator<=>(const Endpoint&) const = default;
};

struct RelationshipRecord {
    std::vector<Endpoint> endpoints;           // ordered, length >= 2
    std::string key;
    Value value;
    uint64_t version = 0;                      // 1..N per (endpoints, key)
    uint64_t seq = 0;
    AuditRecord audit;

    bool has_endpoint(const AssetId& a, std::optional<Partition> p = std::nullopt) const {
        for (const auto& e : endpoints) {
            if (e.asset == a && (!p || e.partition == *p)) return true;
        }
        return false;
    }
};

struct AssetRegistration {
    AssetId asset;
    std::string kind;
    AuditRecord audit;
};

struct ReadAudit {
    AuditRecord audit;    // op == Get
};

// ---------------------------------------------------------------------------
// Canonical JSON forms.
// ---------------------------------------------------------------------------

inline Value to_json(const AuditRecord& a) {
    Value j;
    j["actor"] = a.actor;
    j["op"] = std::string(audit_op_name(a.op));
    j["ts"] = a.timestamp_ns;
    j["seq"] = a.seq;
    Value assets = Value::array();
    for (const auto& id : a.assets) assets.push_back(id.uri);
    j["assets"] = std::move(assets);
    if (a.partition) j["partition"] = std::string(partition_name(*a.partition));
    if (!a.key.empty()) j["key"] = a.key;
    if (a.version != 0) j["version"] = a.version;
    if (a.reason) j["reason"] = *a.reason;
    return j;
}

inline AuditRecord audit_from_json(const Value& j) {
    AuditRecord a;
    a.actor = j.at("actor").get<std::string>();
    a.op = parse_audit_op(j.at("op").get<std::string>());
    a.timestamp_ns = j.at("ts").get<int64_t>();
    a.seq = j.value("seq", uint64_t{0});
    for (const auto& uri : j.at("assets")) a.assets.push_back({uri.get<std::string>()});
    if (j.contains("partition")) a.partition = parse_partition(j["partition"].get<std::string>());
    a.key = j.value("key", std::string{});
    a.version = j.value("version", uint64_t{0});
    if (j.contains("reason")) a.reason = j["reason"].get<std::string>();
    return a;
}

inline Value to_json(const MetadataItem& mi) {
    Value j;
    j["asset"] = mi.asset.uri;
    j["partition"] = std::string(partition_name(mi.partition));
    j["key"] = mi.key;
    j["value"] = mi.value;
    j["version"] = mi.version;
    j["seq"] = mi.seq;
    if (mi.superseded_by) j["superseded_by"] = *mi.superseded_by;
    if (mi.supersedes) j["supersedes"] = *mi.supersedes;
    j["audit"] = to_json(mi.audit);
    return j;
}

inline MetadataItem item_from_json(const Value& j) {
    MetadataItem mi;
    mi.asset = {j.at("asset").get<std::string>()};
    mi.partition = parse_partition(j.at("partition").get<std::string>());
    mi.key = j.at("key").get<std::string>();
    mi.value = j.at("value");
    mi.version = j.at("version").get<uint64_t>();
    mi.seq = j.at("seq").get<uint64_t>();
    if (j.contains("superseded_by")) mi.superseded_by = j["superseded_by"].get<uint64_t>();
    if (j.contains("supersedes")) mi.supersedes = j["supersedes"].get<uint64_t>();
    mi.audit = audit_from_json(j.at("audit"));
    return mi;
}

inline Value to_json(const RelationshipRecord& r) {
    Value j;
    Value eps = Value::array();
    for (const auto& e : r.endpoints) {
        eps.push_back({{"asset", e.asset.uri},
                       {"partition", std::string(partition_name(e.partition))}});
    }
    j["endpoints"] = std::move(eps);
    j["key"] = r.key;
    j["value"] = r.value;
    j["version"] = r.version;
    j["seq"] = r.seq;
    j["audit"] = to_json(r.audit);
    return j;
}

inline RelationshipRecord relationship_from_json(const Value& j) {
    RelationshipRecord r;
    for (const auto& e : j.at("endpoints")) {
        r.endpoints.push_back({{e.at("asset").get<std::string>()},
                               parse_partition(e.at("partition").get<std::string>())});
    }
    r.key = j.at("key").get<std::string>();
    r.value = j.at("value");
    r.version = j.at("version").get<uint64_t>();
    r.seq = j.at("seq").get<uint64_t>();
    r.audit = audit_from_json(j.at("audit"));
    return r;
}

inline Value to_json(const AssetRegistration& reg) {
    Value j;
    j["uri"] = reg.asset.uri;
    j["kind"] = reg.kind;
    j["audit"] = to_json(reg.audit);
    return j;
}

inline AssetRegistration registration_from_json(const Value& j) {
    AssetRegistration reg;
    reg.asset = {j.at("uri").get<std::string>()};
    reg.kind = j.at("kind").get<std::string>();
    reg.audit = audit_from_json(j.at("audit"));
    return reg;
}

} // namespace w5cat
