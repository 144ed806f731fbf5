#pragma once

// JSON round-trip for spectra and the named parametric families used in
// config files:
//
//   {"family": "explicit", "values": [4, 2, 1]}
//   {"family": "isotropic", "level": 1.0, "p": 100}
//   {"family": "geometric", "scale": 1.0, "ratio": 0.5, "p": 100}      sigma_j = scale * ratio^j
//   {"family": "polynomial", "scale": 1.0, "alpha": 1.0, "p": 100}    sigma_j = scale * j^-alpha
//   {"family": "spike_plus_flat", "k0": 2, "spike": 1.0, "flat": 0.01, "p": 1000}
//   {"family": "spike_plus_flat", "k0": 2, "spike": 1.0, "tail_trace": 20, "p_mult": 20}
//   {"family": "three_block", "k0": 4, "k": 400, "a": 1, "b": 0.5, "c": 1.25e-3, "alpha": 1, "p": 10000}
//
// The dimension comes from "p", or from "p_mult" * N or N^"p_power" when the
// family is used along a sample-size sequence.

#include <optional>
#include <string>

#include <json.hpp>

#include "benign/spectrum.hpp"

namespace benign {

nlohmann::json spectrum_to_json(const Spectrum& s);
Spectrum spectrum_from_json(const nlohmann::json& j);

struct ThreeBlockParams {
  int k0 = 0;
  int k = 0;
  int p = 0;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double alpha = 1.0;
};

/// sigma_j = a (j <= k0), b j^-alpha (k0 < j <= k), c (j > k). Throws
/// SpectrumNotSorted when the block boundaries break monotonicity.
Spectrum three_block_spectrum(const ThreeBlockParams& params);

class SpectrumFamily {
 public:
  explicit SpectrumFamily(nlohmann::json params);

  const std::string& name() const { return name_; }
  const nlohmann::json& params() const { return params_; }

  /// Dimension used at sample size N.
  int dim_for(int N) const;
  Spectrum make(int N) const;

 private:
  std::string name_;
  nlohmann::json params_;
};

}  // namespace benign
