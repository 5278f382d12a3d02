#include "brw/scheme_json.hpp"

#include <fstream>

#include "brw/error.hpp"

namespace brw {

namespace {

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

json pmf_to_json(const std::vector<PmfEntry>& pmf) {
  json arr = json::array();
  for (const auto& e : pmf) arr.push_back({{"value", e.value}, {"prob", e.prob}});
  return arr;
}

std::vector<PmfEntry> pmf_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("pmf must be an array of {value, prob}");
  std::vector<PmfEntry> out;
  for (const auto& e : j) out.push_back({field<double>(e, "value"), field<double>(e, "prob")});
  return out;
}

json to_json(const OffspringLaw& law) {
  switch (law.kind()) {
    case OffspringLaw::Kind::binary_critical: return {{"law", "binary_critical"}};
    case OffspringLaw::Kind::geometric:
      if (law.param() == 0.5) return {{"law", "geometric_mean_one"}};
      return {{"law", "geometric"}, {"p", law.param()}};
    case OffspringLaw::Kind::poisson:
      if (law.param() == 1.0) return {{"law", "poisson_mean_one"}};
      return {{"law", "poisson"}, {"mean", law.param()}};
    case OffspringLaw::Kind::pmf: {
      json j{{"law", "pmf"}, {"pmf", pmf_to_json(law.pmf().entries())}};
      if (law.declared_mean()) j["declared_mean"] = *law.declared_mean();
      return j;
    }
  }
  return {};
}

json to_json(const StepLaw& law) {
  switch (law.kind()) {
    case StepLaw::Kind::rademacher: return {{"law", "rademacher"}};
    case StepLaw::Kind::uniform_pm: return {{"law", "uniform_pm"}, {"a", law.half_width()}};
    case StepLaw::Kind::pmf: return {{"law", "pmf"}, {"pmf", pmf_to_json(law.pmf().entries())}};
    case StepLaw::Kind::gaussian: return {{"law", "gaussian"}, {"variance", law.variance_param()}};
  }
  return {};
}

namespace {

json lambda_json(const LambdaMode& m) {
  if (m.kind == LambdaMode::Kind::sup_chi_pos) return {{"mode", "sup_chi_pos"}};
  return {{"mode", "sup_plus_noise"}, {"noise", pmf_to_json(m.noise.entries())}};
}

json weight_json(const WeightMode& m) {
  switch (m.kind) {
    case WeightMode::Kind::constant: return {{"mode", "constant"}, {"c", m.c}};
    case WeightMode::Kind::per_child: return {{"mode", "per_child"}};
    case WeightMode::Kind::custom: return {{"mode", "custom"}, {"pmf", pmf_to_json(m.custom.entries())}};
  }
  return {};
}

LambdaMode lambda_from(const json& j) {
  LambdaMode m;
  const auto mode = field<std::string>(j, "mode");
  if (mode == "sup_chi_pos") return m;
  if (mode == "sup_plus_noise") {
    m.kind = LambdaMode::Kind::sup_plus_noise;
    m.noise = DiscretePmf(pmf_from_json(j.at("noise")), "lambda noise");
    return m;
  }
  throw ConfigError("unknown lambda mode '" + mode + "'");
}

WeightMode weight_from(const json& j) {
  WeightMode m;
  const auto mode = field<std::string>(j, "mode");
  if (mode == "constant") {
    m.c = j.value("c", 1.0);
    return m;
  }
  if (mode == "per_child") {
    m.kind = WeightMode::Kind::per_child;
    return m;
  }
  if (mode == "custom") {
    m.kind = WeightMode::Kind::custom;
    m.custom = DiscretePmf(pmf_from_json(j.at("pmf")), "weight pmf");
    return m;
  }
  throw ConfigError("unknown weight mode '" + mode + "'");
}

}  // namespace

json to_json(const SchemeSpec& spec) {
  if (auto* s = std::get_if<IidChildren>(&spec.law))
    return {{"kind", "iid_children"}, {"offspring", to_json(s->offspring)}, {"step", to_json(s->step)},
            {"lambda", lambda_json(s->lambda)}, {"weight", weight_json(s->weight)}};
  if (auto* s = std::get_if<SharedStep>(&spec.law))
    return {{"kind", "shared_step"}, {"offspring", to_json(s->offspring)}, {"step", to_json(s->step)},
            {"lambda", lambda_json(s->lambda)}, {"weight", weight_json(s->weight)}};
  const auto& t = std::get<Tabulated>(spec.law);
  json outs = json::array();
  for (const auto& o : t.outcomes)
    outs.push_back({{"prob", o.prob}, {"atoms", o.atoms}, {"lambda", o.lambda}, {"weight", o.weight}});
  return {{"kind", "tabulated"}, {"outcomes", outs}};
}

OffspringLaw offspring_from_json(const json& j) {
  const auto law = field<std::string>(j, "law");
  if (law == "binary_critical") return OffspringLaw::binary_critical();
  if (law == "geometric_mean_one") return OffspringLaw::geometric_mean_one();
  if (law == "poisson_mean_one") return OffspringLaw::poisson_mean_one();
  if (law == "geometric") return OffspringLaw::geometric(field<double>(j, "p"));
  if (law == "poisson") return OffspringLaw::poisson(field<double>(j, "mean"));
  if (law == "pmf") {
    std::optional<double> declared;
    if (j.contains("declared_mean")) declared = field<double>(j, "declared_mean");
    return OffspringLaw::from_pmf(pmf_from_json(j.at("pmf")), declared);
  }
  throw ConfigError("unknown offspring law '" + law + "'");
}

StepLaw step_from_json(const json& j) {
  const auto law = field<std::string>(j, "law");
  if (law == "rademacher") return StepLaw::rademacher();
  if (law == "uniform_pm") return StepLaw::uniform_pm(field<int>(j, "a"));
  if (law == "pmf") return StepLaw::from_pmf(pmf_from_json(j.at("pmf")));
  if (law == "gaussian") return StepLaw::gaussian(field<double>(j, "variance"));
  throw ConfigError("unknown step law '" + law + "'");
}

namespace {

SchemeSpec scheme_from_json_impl(const json& j) {
  const auto kind = field<std::string>(j, "kind");
  SchemeSpec spec;
  if (kind == "iid_children" || kind == "shared_step") {
    auto off = offspring_from_json(j.at("offspring"));
    auto st = step_from_json(j.at("step"));
    LambdaMode lm = j.contains("lambda") ? lambda_from(j["lambda"]) : LambdaMode{};
    WeightMode wm = j.contains("weight") ? weight_from(j["weight"]) : WeightMode{};
    if (kind == "iid_children")
      spec.law = IidChildren{std::move(off), std::move(st), std::move(lm), std::move(wm)};
    else
      spec.law = SharedStep{std::move(off), std::move(st), std::move(lm), std::move(wm)};
  } else if (kind == "tabulated") {
    Tabulated t;
    for (const auto& o : j.at("outcomes"))
      t.outcomes.push_back({field<double>(o, "prob"), field<std::vector<int>>(o, "atoms"),
                            field<int>(o, "lambda"), o.value("weight", 1.0)});
    spec.law = std::move(t);
  } else {
    throw ConfigError("unknown scheme kind '" + kind + "'");
  }
  validate(spec);
  return spec;
}

}  // namespace

SchemeSpec scheme_from_json(const json& j) {
  try {
    return scheme_from_json_impl(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scheme: ") + e.what());
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

SchemeSpec load_scheme(const std::string& path) {
  return scheme_from_json(read_json_file(path));
}

}  // namespace brw
