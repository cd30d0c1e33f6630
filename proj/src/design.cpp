#include "rae/design.hpp"

#include <algorithm>

namespace rae {

const std::vector<std::string>& feature_vocabulary() {
  static const std::vector<std::string> names = {
      "experience", "gender",    "male",      "age",        "age_25_34",
      "age_35_44",  "age_45_54", "age_55_64", "age_65plus", "high_value"};
  return names;
}

bool is_known_feature(std::string_view name) {
  const auto& v = feature_vocabulary();
  return std::find(v.begin(), v.end(), name) != v.end();
}

std::optional<double> feature_value(std::string_view name, const UserTraits& traits,
                                    ItemValue frame) {
  if (name == "experience") return traits.crs_experience - 3.0;
  if (name == "gender") {
    if (traits.gender == Gender::Female) return 1.0;
    if (traits.gender == Gender::Male) return -1.0;
    return std::nullopt;
  }
  if (name == "male") {
    if (traits.gender == Gender::Male) return 1.0;
    if (traits.gender == Gender::Female) return 0.0;
    return std::nullopt;
  }
  if (name == "age") return static_cast<double>(index(traits.age_group)) - 2.5;
  if (name == "high_value") return frame == ItemValue::High ? 1.0 : 0.0;
  static constexpr std::pair<std::string_view, AgeGroup> dummies[] = {
      {"age_25_34", AgeGroup::A25_34},
      {"age_35_44", AgeGroup::A35_44},
      {"age_45_54", AgeGroup::A45_54},
      {"age_55_64", AgeGroup::A55_64},
      {"age_65plus", AgeGroup::A65plus},
  };
  for (const auto& [token, group] : dummies) {
    if (name == token) return traits.age_group == group ? 1.0 : 0.0;
  }
  throw Error(Errc::InvalidArgument, "unknown feature '" + std::string(name) + "'");
}

std::optional<Covariates> make_covariates(std::span<const std::string> features,
                                          const UserTraits& traits, ItemValue frame,
                                          std::optional<std::size_t> group) {
  Covariates c;
  c.group = group;
  c.x.reserve(features.size());
  for (const auto& f : features) {
    auto v = feature_value(f, traits, frame);
    if (!v) return std::nullopt;
    c.x.push_back(*v);
  }
  return c;
}

}  // namespace rae
