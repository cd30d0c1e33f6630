#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rae/core.hpp"
#include "rae/ordinal.hpp"

namespace rae {

// Named predictor vocabulary shared by the pipeline fits and the simulator.
//
//   experience   crs_experience - 3 (neutral respondent contributes zero)
//   gender       effect coding: Female +1, Male -1 (Other/Undisclosed: not codable)
//   male         dummy coding: Male 1, Female 0 (Other/Undisclosed: not codable)
//   age          age-group index centred on the scale midpoint (-2.5 .. 2.5)
//   age_25_34 .. age_65plus   dummies against the 18-24 reference
//   high_value   1 for the high-value frame, 0 otherwise

/// Every recognised feature name.
const std::vector<std::string>& feature_vocabulary();

bool is_known_feature(std::string_view name);

/// nullopt when the feature cannot be coded for these traits (e.g. gender
/// "Other" under effect coding); such rows are dropped from fits.
/// Throws Error{InvalidArgument} for unknown feature names.
std::optional<double> feature_value(std::string_view name, const UserTraits& traits,
                                    ItemValue frame);

std::optional<Covariates> make_covariates(std::span<const std::string> features,
                                          const UserTraits& traits, ItemValue frame,
                                          std::optional<std::size_t> group = std::nullopt);

}  // namespace rae
