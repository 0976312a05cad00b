#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace w5cat {

enum class Errc {
    unknown_partition,
    invalid_asset_id,
    validation_failure,
    unknown_asset,
    relationship_partition_misuse,
    not_found,
    already_superseded,
    missing_reason,
    too_few_endpoints,
    empty_left_column,
    empty_query,
    storage_failure,
    corrupt_record,
    snapshot_version_mismatch,
    store_locked,
    empty_distribution,
    no_data,
    no_ratings,
    empty_sample,
    malformed_row,
    unknown_mental_model,
    choice_not_in_model,
    unknown_criterion_label,
};

inline std::string_view errc_name(Errc c) {
    switch (c) {
        case Errc::unknown_partition:             return "UnknownPartition";
        case Errc::invalid_asset_id:              return "InvalidAssetId";
        case Errc::validation_failure:            return "ValidationFailure";
        case Errc::unknown_asset:                 return "UnknownAsset";
        case Errc::relationship_partition_misuse: return "RelationshipPartitionMisuse";
        case Errc::not_found:                     return "NotFound";
        case Errc::already_superseded:            return "AlreadySuperseded";
        case Errc::missing_reason:                return "MissingReason";
        case Errc::too_few_endpoints:             return "TooFewEndpoints";
        case Errc::empty_left_column:             return "EmptyLeftColumn";
        case Errc::empty_query:                   return "EmptyQuery";
        case Errc::storage_failure:               return "StorageFailure";
        case Errc::corrupt_record:                return "CorruptRecord";
        case Errc::snapshot_version_mismatch:     return "SnapshotVersionMismatch";
        case Errc::store_locked:                  return "StoreLocked";
        case Errc::empty_distribution:            return "EmptyDistribution";
        case Errc::no_data:                       return "NoData";
        case Errc::no_ratings:                    return "NoRatings";
        case Errc::empty_sample:                  return "EmptySample";
        case Errc::malformed_row:                 return "MalformedRow";
        case Errc::unknown_mental_model:          return "UnknownMentalModel";
        case Errc::choice_not_in_model:           return "ChoiceNotInModel";
        case Errc::unknown_criterion_label:       return "UnknownCriterionLabel";
    }
    return "Error";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace w5cat
