#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ebpois/discrete_prior.hpp"
#include "ebpois/estimators.hpp"
#include "ebpois/moment_match.hpp"
#include "ebpois/npmle.hpp"

namespace ebpois {

using Json = nlohmann::ordered_json;

Json to_json(const DiscretePrior& prior);
/// {"atoms":[...],"weights":[...]}; InvalidInput on malformed input.
DiscretePrior prior_from_json(const Json& j);

/// prior, log_likelihood, kkt_gap, support_gap, iterations, converged.
Json to_json(const NpmleFit& fit);
Json to_json(const MatchReport& report);

/// Newline-separated nonnegative integers, or {"counts": {"0": 12, ...}}.
CountHistogram parse_histogram(std::string_view text);

/// Columns y, estimate, flags (infinite / degenerate).
void write_rule_csv(std::ostream& os, const FittedRule& rule,
                    const std::vector<std::pair<std::string, std::string>>& header);

std::string read_file(const std::string& path);
/// Writes via a temporary file and rename.
void write_file(const std::string& path, std::string_view contents);

}  // namespace ebpois
