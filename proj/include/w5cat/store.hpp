#pragma once
// Append-only, crash-recoverable store. A single writer serializes all
// appends; seq, per-key version and timestamp are assigned inside that
// critical section. Readers take an immutable state snapshot and never
// hold the writer lock while working.

#include "w5cat/core.hpp"
#include "w5cat/errors.hpp"
#include "w5cat/log.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace w5cat {

inline constexpr std::string_view snapshot_format = "W5SNAP1";

struct AssetInfo {
    std::string kind;
    uint64_t seq = 0;     // first registration
};

// Partition-major key: every partition is a physically contiguous range of
// the index, one "table" per profile.
struct MiKey {
    Partition partition = Partition::What;
    std::string asset_uri;
    std::string key;

    auto operator<=>(const MiKey&) const = default;
};

struct RelKey {
    std::vector<Endpoint> endpoints;
    std::string key;

    auto operator<=>(const RelKey&) const = default;
};

struct CatalogState {
    std::map<std::string, AssetInfo> assets;            // by uri
    std::map<MiKey, std::vector<MetadataItem>> index;   // versions 1..N in order
    std::vector<RelationshipRecord> relationships;      // seq order
    std::map<RelKey, std::vector<size_t>> rel_index;    // positions per (endpoints, key)
    std::vector<AuditRecord> audit;                     // seq order
    uint64_t last_seq = 0;
    int64_t last_ts = 0;

    bool has_asset(const AssetId& id) const { return assets.count(id.uri) > 0; }

    const std::vector<MetadataItem>* versions_of(const AssetId& a, Partition p,
                                                 const std::string& key) const {
        auto it = index.find(MiKey{p, a.uri, key});
        return it == index.end() ? nullptr : &it->second;
    }

    void apply(const Envelope& env) {
        if (env.seq != last_seq + 1) {
            throw Error(Errc::corrupt_record,
                        "sequence gap: expected " + std::to_string(last_seq + 1) +
                        ", got " + std::to_string(env.seq));
        }
        std::visit([&](const auto& p) { fold(p); }, env.payload);
        last_seq = env.seq;
    }

private:
    void note_audit(const AuditRecord& a) {
        if (a.timestamp_ns < last_ts) {
            throw Error(Errc::corrupt_record, "audit timestamps regress");
        }
        last_ts = a.timestamp_ns;
        audit.push_back(a);
    }

    void fold(const AssetRegistration& reg) {
        assets.emplace(reg.asset.uri, AssetInfo{reg.kind, reg.audit.seq});
        note_audit(reg.audit);
    }

    void fold(const MetadataItem& mi) {
        auto& versions = index[MiKey{mi.partition, mi.asset.uri, mi.key}];
        if (mi.version != versions.size() + 1) {
            throw Error(Errc::corrupt_record,
                        "non-contiguous version " + std::to_string(mi.version) +
                        " for key '" + mi.key + "'");
        }
        if (mi.supersedes) {
            if (*mi.supersedes == 0 || *mi.supersedes > versions.size()) {
                throw Error(Errc::corrupt_record, "supersede target out of range");
            }
            versions[*mi.supersedes - 1].superseded_by = mi.version;
        }
        versions.push_back(mi);
        note_audit(mi.audit);
    }

    void fold(const RelationshipRecord& rel) {
        auto& positions = rel_index[RelKey{rel.endpoints, rel.key}];
        if (rel.version != positions.size() + 1) {
            throw Error(Errc::corrupt_record, "non-contiguous relationship version");
        }
        positions.push_back(relationships.size());
        relationships.push_back(rel);
        note_audit(rel.audit);
    }

    void fold(const ReadAudit& ra) { note_audit(ra.audit); }
};

// ---------------------------------------------------------------------------
// State serialization (snapshots) and replay.
// ---------------------------------------------------------------------------

inline Value to_json(const CatalogState& s) {
    Value j;
    j["last_seq"] = s.last_seq;
    j["last_ts"] = s.last_ts;
    Value assets = Value::array();
    for (const auto& [uri, info] : s.assets) {
        assets.push_back({{"uri", uri}, {"kind", info.kind}, {"seq", info.seq}});
    }
    j["assets"] = std::move(assets);
    // flat, seq-ordered item list; the index is rebuilt on load
    std::vector<const MetadataItem*> items;
    for (const auto& [key, versions] : s.index) {
        (void)key;
        for (const auto& mi : versions) items.push_back(&mi);
    }
    std::sort(items.begin(), items.end(),
              [](const auto* a, const auto* b) { return a->seq < b->seq; });
    Value jitems = Value::array();
    for (const auto* mi : items) jitems.push_back(to_json(*mi));
    j["items"] = std::move(jitems);
    Value rels = Value::array();
    for (const auto& r : s.relationships) rels.push_back(to_json(r));
    j["relationships"] = std::move(rels);
    Value audit = Value::array();
    for (const auto& a : s.audit) audit.push_back(to_json(a));
    j["audit"] = std::move(audit);
    return j;
}

inline CatalogState state_from_json(const Value& j) {
    CatalogState s;
    s.last_seq = j.at("last_seq").get<uint64_t>();
    s.last_ts = j.at("last_ts").get<int64_t>();
    for (const auto& a : j.at("assets")) {
        s.assets.emplace(a.at("uri").get<std::string>(),
                         AssetInfo{a.at("kind").get<std::string>(), a.at("seq").get<uint64_t>()});
    }
    for (const auto& ji : j.at("items")) {
        MetadataItem mi = item_from_json(ji);
        s.index[MiKey{mi.partition, mi.asset.uri, mi.key}].push_back(std::move(mi));
    }
    for (auto& [key, versions] : s.index) {
        (void)key;
        std::sort(versions.begin(), versions.end(),
                  [](const auto& a, const auto& b) { return a.version < b.version; });
    }
    for (const auto& jr : j.at("relationships")) {
        RelationshipRecord r = relationship_from_json(jr);
        s.rel_index[RelKey{r.endpoints, r.key}].push_back(s.relationships.size());
        s.relationships.push_back(std::move(r));
    }
    for (const auto& ja : j.at("audit")) s.audit.push_back(audit_from_json(ja));
    return s;
}

struct ReplayResult {
    CatalogState state;
    bool torn_tail = false;
};

// Deterministic fold of a raw log image into catalog state.
inline ReplayResult replay(const std::string& log_bytes) {
    DecodedLog decoded = decode_log(log_bytes);
    ReplayResult out;
    out.torn_tail = decoded.torn_tail;
    for (const auto& env : decoded.records) out.state.apply(env);
    return out;
}

inline std::string snapshot_bytes(const CatalogState& s) {
    return std::string(snapshot_format) + "\n" + canonical_text(to_json(s)) + "\n";
}

inline CatalogState load_snapshot(const std::string& bytes) {
    const std::string header(snapshot_format);
    if (bytes.size() < header.size() + 1 || bytes.compare(0, header.size(), header) != 0 ||
        bytes[header.size()] != '\n') {
        throw Error(Errc::snapshot_version_mismatch, "unrecognized snapshot format header");
    }
    Value j = Value::parse(std::string_view(bytes).substr(header.size() + 1), nullptr, false);
    if (j.is_discarded()) {
        throw Error(Errc::snapshot_version_mismatch, "snapshot body unparseable");
    }
    return state_from_json(j);
}

// Snapshot + log suffix: records at or before the snapshot point are skipped.
inline CatalogState load_snapshot(const std::string& bytes, const std::string& log_tail) {
    CatalogState s = load_snapshot(bytes);
    DecodedLog decoded = decode_log(log_tail);
    for (const auto& env : decoded.records) {
        if (env.seq <= s.last_seq) continue;
        s.apply(env);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Store: durable log + published immutable state.
// ---------------------------------------------------------------------------

struct StoreOptions {
    bool audit_reads = true;
    uint64_t snapshot_every = 10000;
};

inline std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::storage_failure, "cannot read " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

class Store {
public:
    explicit Store(std::filesystem::path dir, StoreOptions opts = {})
        : dir_(std::move(dir)), opts_(opts) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw Error(Errc::storage_failure, "cannot create " + dir_.string());

        lock_fd_ = ::open((dir_ / ".lock").c_str(), O_CREAT | O_RDWR, 0644);
        if (lock_fd_ < 0) throw Error(Errc::storage_failure, "cannot open lock file");
        if (::flock(lock_fd_, LOCK_EX | LOCK_NB) != 0) {
            ::close(lock_fd_);
            lock_fd_ = -1;
            throw Error(Errc::store_locked,
                        "data dir " + dir_.string() + " is owned by another process");
        }

        CatalogState state;
        uint64_t snap_seq = 0;
        if (auto snap = newest_snapshot()) {
            state = load_snapshot(read_file_bytes(*snap));
            snap_seq = state.last_seq;
        }
        const auto log_path = dir_ / "catalog.log";
        if (std::filesystem::exists(log_path)) {
            DecodedLog decoded = decode_log(read_file_bytes(log_path));
            torn_tail_dropped_ = decoded.torn_tail;
            for (const auto& env : decoded.records) {
                if (env.seq <= snap_seq) continue;
                state.apply(env);
            }
        }
        state_ = std::make_shared<const CatalogState>(std::move(state));

        log_fd_ = ::open(log_path.c_str(), O_CREAT | O_WRONLY | O_APPEND, 0644);
        if (log_fd_ < 0) throw Error(Errc::storage_failure, "cannot open log for append");
    }

    ~Store() {
        if (log_fd_ >= 0) ::close(log_fd_);
        if (lock_fd_ >= 0) ::close(lock_fd_);   // releases the flock
    }

    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    const std::filesystem::path& dir() const { return dir_; }
    const StoreOptions& options() const { return opts_; }
    bool torn_tail_dropped() const { return torn_tail_dropped_; }

    // Immutable snapshot of the current state; never blocks writers for
    // longer than a pointer copy.
    std::shared_ptr<const CatalogState> state() const {
        std::lock_guard lock(state_mutex_);
        return state_;
    }

    uint64_t register_asset(const std::string& actor, const AssetId& asset,
                            const std::string& kind) {
        require_actor(actor);
        if (!asset_id_ok(asset)) {
            throw Error(Errc::invalid_asset_id, "'" + asset.uri + "'");
        }
        std::lock_guard lock(write_mutex_);
        AssetRegistration reg;
        reg.asset = asset;
        reg.kind = kind;
        reg.audit = make_audit(actor, AuditOp::Set, {asset});
        return commit(Envelope{next_seq(), std::move(reg)});
    }

    MetadataItem set_item(const std::string& actor, const AssetId& asset, Partition partition,
                          const std::string& key, const Value& value) {
        require_item_payload(actor, key, value);
        std::lock_guard lock(write_mutex_);
        MetadataItem mi = draft_item(actor, AuditOp::Set, asset, partition, key, value);
        commit(Envelope{mi.seq, mi});
        return mi;
    }

    MetadataItem supersede_item(const std::string& actor, const AssetId& asset,
                                Partition partition, const std::string& key,
                                uint64_t old_version, const Value& value,
                                const std::string& reason) {
        require_item_payload(actor, key, value);
        if (reason.empty()) {
            throw Error(Errc::missing_reason, "supersede requires a non-empty reason");
        }
        std::lock_guard lock(write_mutex_);
        const auto* versions = state_unlocked().versions_of(asset, partition, key);
        if (!versions || old_version == 0 || old_version > versions->size()) {
            throw Error(Errc::not_found,
                        "no version " + std::to_string(old_version) + " of key '" + key + "'");
        }
        if ((*versions)[old_version - 1].superseded_by) {
            throw Error(Errc::already_superseded,
                        "version " + std::to_string(old_version) + " of key '" + key +
                        "' was already corrected by version " +
                        std::to_string(*(*versions)[old_version - 1].superseded_by));
        }
        MetadataItem mi = draft_item(actor, AuditOp::Supersede, asset, partition, key, value);
        mi.supersedes = old_version;
        mi.audit.reason = reason;
        commit(Envelope{mi.seq, mi});
        return mi;
    }

    RelationshipRecord relate(const std::string& actor, const std::vector<Endpoint>& endpoints,
                              const std::string& key, const Value& value) {
        require_item_payload(actor, key, value);
        if (endpoints.size() < 2) {
            throw Error(Errc::too_few_endpoints, "a relationship needs at least 2 endpoints");
        }
        std::lock_guard lock(write_mutex_);
        RelationshipRecord rel;
        rel.endpoints = endpoints;
        rel.key = key;
        rel.value = value;
        rel.seq = next_seq();
        auto it = state_unlocked().rel_index.find(RelKey{endpoints, key});
        rel.version = (it == state_unlocked().rel_index.end()) ? 1 : it->second.size() + 1;
        std::vector<AssetId> assets;
        for (const auto& e : endpoints) assets.push_back(e.asset);
        rel.audit = make_audit(actor, AuditOp::Relate, assets);
        rel.audit.key = key;
        rel.audit.version = rel.version;
        commit(Envelope{rel.seq, rel});
        return rel;
    }

    void read_audit(const std::string& actor, const AssetId& asset,
                    std::optional<Partition> partition, const std::string& key) {
        if (!opts_.audit_reads) return;
        require_actor(actor);
        std::lock_guard lock(write_mutex_);
        ReadAudit ra;
        ra.audit = make_audit(actor, AuditOp::Get, {asset});
        ra.audit.partition = partition;
        ra.audit.key = key;
        commit(Envelope{ra.audit.seq, std::move(ra)});
    }

    void write_snapshot() {
        std::lock_guard lock(write_mutex_);
        write_snapshot_unlocked();
    }

    // One decoded record per line, for inspection.
    std::string export_jsonl() const {
        const auto log_path = dir_ / "catalog.log";
        if (!std::filesystem::exists(log_path)) return {};
        DecodedLog decoded = decode_log(read_file_bytes(log_path));
        std::string out;
        for (const auto& env : decoded.records) {
            out += canonical_text(to_json(env));
            out += '\n';
        }
        return out;
    }

private:
    void require_actor(const std::string& actor) const {
        if (actor.empty()) {
            throw Error(Errc::validation_failure, "actor must be non-empty");
        }
    }

    void require_item_payload(const std::string& actor, const std::string& key,
                              const Value& value) const {
        require_actor(actor);
        if (key.empty()) throw Error(Errc::validation_failure, "key must be non-empty");
        require_valid_value(value);
    }

    const CatalogState& state_unlocked() const { return *state_; }

    uint64_t next_seq() const { return state_->last_seq + 1; }

    int64_t next_timestamp() const {
        const auto now = std::chrono::duration_cast<std::chrono::nanoseconds>(
                             std::chrono::system_clock::now().time_since_epoch())
                             .count();
        return std::max<int64_t>(now, state_->last_ts);
    }

    AuditRecord make_audit(const std::string& actor, AuditOp op, std::vector<AssetId> assets) {
        AuditRecord a;
        a.actor = actor;
        a.op = op;
        a.timestamp_ns = next_timestamp();
        a.seq = next_seq();
        a.assets = std::move(assets);
        return a;
    }

    MetadataItem draft_item(const std::string& actor, AuditOp op, const AssetId& asset,
                            Partition partition, const std::string& key, const Value& value) {
        MetadataItem mi;
        mi.asset = asset;
        mi.partition = partition;
        mi.key = key;
        mi.value = value;
        mi.seq = next_seq();
        const auto* versions = state_unlocked().versions_of(asset, partition, key);
        mi.version = versions ? versions->size() + 1 : 1;
        mi.audit = make_audit(actor, op, {asset});
        mi.audit.partition = partition;
        mi.audit.key = key;
        mi.audit.version = mi.version;
        return mi;
    }

    // Assumes write_mutex_ held. Durably appends, folds, publishes.
    uint64_t commit(const Envelope& env) {
        const std::string frame = encode_frame(env);
        ssize_t n = ::write(log_fd_, frame.data(), frame.size());
        if (n != static_cast<ssize_t>(frame.size())) {
            throw Error(Errc::storage_failure, "short write to catalog.log");
        }
        auto next = std::make_shared<CatalogState>(*state_);
        next->apply(env);
        {
            std::lock_guard lock(state_mutex_);
            state_ = std::move(next);
        }
        if (++appends_since_snapshot_ >= opts_.snapshot_every) {
            write_snapshot_unlocked();
        }
        return env.seq;
    }

    void write_snapshot_unlocked() {
        const auto snap = *state_;
        const auto path = dir_ / ("catalog.snap." + std::to_string(snap.last_seq));
        const auto tmp = dir_ / ".snap.tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << snapshot_bytes(snap);
            if (!out) throw Error(Errc::storage_failure, "cannot write snapshot");
        }
        std::filesystem::rename(tmp, path);
        appends_since_snapshot_ = 0;
    }

    std::optional<std::filesystem::path> newest_snapshot() const {
        std::optional<std::filesystem::path> best;
        uint64_t best_seq = 0;
        for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
            const std::string name = entry.path().filename().string();
            constexpr std::string_view prefix = "catalog.snap.";
            if (name.rfind(prefix, 0) != 0) continue;
            uint64_t seq = 0;
            try {
                seq = std::stoull(name.substr(prefix.size()));
            } catch (...) {
                continue;
            }
            if (!best || seq > best_seq) {
                best = entry.path();
                best_seq = seq;
            }
        }
        return best;
    }

    std::filesystem::path dir_;
    StoreOptions opts_;
    int lock_fd_ = -1;
    int log_fd_ = -1;
    bool torn_tail_dropped_ = false;
    uint64_t appends_since_snapshot_ = 0;
    std::shared_ptr<const CatalogState> state_;
    mutable std::mutex state_mutex_;
    std::mutex write_mutex_;
};

} // namespace w5cat
