#pragma once

#include <vector>

#include "brw/random.hpp"
#include "brw/scheme.hpp"

namespace brw {

// One draw of the size-biased atom Z together with the indicator of the
// good event {chi(R) <= count_threshold} and {Lambda <= max_decoration}.
struct PalmDraw {
  double z = 0;
  bool indicator = false;
};

struct PalmAtom {
  double z;
  bool indicator;
  double prob;
};

class PalmSampler {
 public:
  // Requires a critical scheme (mean offspring 1 within 1e-12).
  PalmSampler(const SchemeSpec& spec, double max_decoration, double count_threshold);
  PalmDraw draw(RandomStream& rng);

 private:
  SchemeSampler sampler_;
  double max_decoration_;
  double count_threshold_;
  int kmax_;
  ReproductionSample buf_;
};

PalmDraw size_biased_atom(const SchemeSpec& spec, double max_decoration, double count_threshold,
                          RandomStream& rng);

// Exact law of (Z, indicator) for a tabulated scheme, equal atoms merged.
std::vector<PalmAtom> size_biased_law(const SchemeSpec& spec, double max_decoration,
                                      double count_threshold);

}  // namespace brw
