#include "brw/many_to_one.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "brw/error.hpp"

namespace brw {

double ManyToOneCheck::abs_diff() const { return std::abs(lhs - rhs); }

namespace {

using Config = std::vector<int>;

void expand_config(const std::vector<TabulatedOutcome>& outs, const Config& cfg, std::size_t i, double p,
                   Config& child, std::map<Config, double>& acc) {
  if (i == cfg.size()) {
    Config key = child;
    std::sort(key.begin(), key.end());
    acc[key] += p;
    return;
  }
  for (const auto& o : outs) {
    if (o.prob == 0) continue;
    const std::size_t mark = child.size();
    for (int x : o.atoms) child.push_back(cfg[i] + x);
    expand_config(outs, cfg, i + 1, p * o.prob, child, acc);
    child.resize(mark);
  }
}

}  // namespace

ManyToOneCheck many_to_one_check(const SchemeSpec& spec, int n_gen, const std::function<double(int)>& g,
                                 std::size_t max_configs) {
  const auto* tab = std::get_if<Tabulated>(&spec.law);
  if (!tab) throw ConfigError("many_to_one_check needs a tabulated scheme");
  validate(spec);
  if (n_gen < 0) throw ConfigError("many_to_one_check: negative generation");

  std::map<Config, double> gen{{Config{0}, 1.0}};
  for (int k = 0; k < n_gen; ++k) {
    std::map<Config, double> next;
    Config child;
    for (const auto& [cfg, p] : gen) {
      if (static_cast<double>(cfg.size()) * std::log(static_cast<double>(tab->outcomes.size())) >
          std::log(static_cast<double>(max_configs)))
        throw PreconditionError("many_to_one_check: generation too large to enumerate");
      expand_config(tab->outcomes, cfg, 0, p, child, next);
      if (next.size() > max_configs) throw PreconditionError("many_to_one_check: too many configurations");
    }
    gen = std::move(next);
  }
  ManyToOneCheck out;
  for (const auto& [cfg, p] : gen) {
    double s = 0;
    for (int x : cfg) s += g(x);
    out.lhs += p * s;
  }

  std::map<int, double> mean_measure;
  for (const auto& o : tab->outcomes)
    for (int x : o.atoms) mean_measure[x] += o.prob;
  std::map<int, double> conv{{0, 1.0}};
  for (int k = 0; k < n_gen; ++k) {
    std::map<int, double> next;
    for (const auto& [x, p] : conv)
      for (const auto& [y, q] : mean_measure) next[x + y] += p * q;
    conv = std::move(next);
  }
  for (const auto& [x, p] : conv) out.rhs += p * g(x);
  return out;
}

}  // namespace brw
