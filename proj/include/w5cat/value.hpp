#pragma once
// Metadata values are arbitrarily nested trees of null / bool / number /
// text / list / map. Maps keep unique, lexicographically sorted keys, so
// the canonical text form is deterministic.

#include "w5cat/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace w5cat {

using Value = nlohmann::json;

struct Violation {
    std::string path;    // JSON-pointer style, "" = root
    std::string message;
};

namespace detail {

inline void collect_violations(const Value& v, const std::string& path,
                               std::vector<Violation>& out) {
    switch (v.type()) {
        case Value::value_t::number_float: {
            double d = v.get<double>();
            if (!std::isfinite(d)) {
                out.push_back({path, "number is not finite"});
            }
            break;
        }
        case Value::value_t::binary:
        case Value::value_t::discarded:
            out.push_back({path, "not an interchange-representable node"});
            break;
        case Value::value_t::array: {
            size_t i = 0;
            for (const auto& item : v) {
                collect_violations(item, path + "/" + std::to_string(i++), out);
            }
            break;
        }
        case Value::value_t::object:
            for (const auto& [key, item] : v.items()) {
                collect_violations(item, path + "/" + key, out);
            }
            break;
        default:
            break;   // null, bool, integers, text are always fine
    }
}

} // namespace detail

// Returns every violation with its path; empty means the value is valid.
inline std::vector<Violation> validate_value(const Value& v) {
    std::vector<Violation> out;
    detail::collect_violations(v, "", out);
    return out;
}

inline bool value_ok(const Value& v) { return validate_value(v).empty(); }

inline void require_valid_value(const Value& v) {
    auto violations = validate_value(v);
    if (!violations.empty()) {
        std::string msg = "invalid value";
        for (const auto& viol : violations) {
            msg += "; at '" + viol.path + "': " + viol.message;
        }
        throw Error(Errc::validation_failure, msg);
    }
}

// Canonical interchange text: UTF-8, no extra whitespace, object keys sorted.
inline std::string canonical_text(const Value& v) { return v.dump(); }

inline Value parse_value(const std::string& text) {
    Value v = Value::parse(text, nullptr, false);
    if (v.is_discarded()) {
        throw Error(Errc::validation_failure, "unparseable value text: " + text);
    }
    return v;
}

} // namespace w5cat
