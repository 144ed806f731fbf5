#include "benign/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "benign/errors.hpp"
#include "benign/random.hpp"

namespace benign {

namespace {

void validate_sigmas(const Eigen::VectorXd& sigmas) {
  require(sigmas.size() > 0, ErrorCode::kInvalidArgument, "spectrum must be non-empty");
  for (Eigen::Index j = 0; j < sigmas.size(); ++j) {
    require(std::isfinite(sigmas[j]) && sigmas[j] > 0.0, ErrorCode::kInvalidArgument,
            "eigenvalue " + std::to_string(j + 1) + " is not a positive finite number");
    if (j > 0 && sigmas[j] > sigmas[j - 1]) {
      fail(ErrorCode::kSpectrumNotSorted,
           "eigenvalues must be non-increasing (index " + std::to_string(j + 1) + ")");
    }
  }
}

void require_tail(const FeatureSplit& split) {
  require(split.tail_dim() > 0, ErrorCode::kTailEmpty, "the split leaves no tail coordinates");
}

void require_same_dim(const Spectrum& s, const FeatureSplit& split) {
  require(s.dim() == split.dim(), ErrorCode::kBadSplit,
          "split dimension " + std::to_string(split.dim()) + " does not match spectrum dimension " +
              std::to_string(s.dim()));
}

}  // namespace

Spectrum::Spectrum(Eigen::VectorXd sigmas) : sigmas_(std::move(sigmas)) {
  validate_sigmas(sigmas_);
}

Spectrum::Spectrum(const std::vector<double>& sigmas)
    : Spectrum(Eigen::Map<const Eigen::VectorXd>(sigmas.data(),
                                                 static_cast<Eigen::Index>(sigmas.size()))) {}

Spectrum::Spectrum(Eigen::VectorXd sigmas, Eigen::MatrixXd basis)
    : sigmas_(std::move(sigmas)), basis_(std::move(basis)) {
  validate_sigmas(sigmas_);
  const auto& u = *basis_;
  require(u.rows() == sigmas_.size() && u.cols() == sigmas_.size(), ErrorCode::kInvalidArgument,
          "basis must be p x p");
  const double err =
      (u.transpose() * u - Eigen::MatrixXd::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
  require(err <= 1e-10, ErrorCode::kInvalidArgument, "basis is not orthogonal");
}

Spectrum Spectrum::with_random_rotation(std::uint64_t seed) const {
  Rng rng(seed);
  const Eigen::Index p = sigmas_.size();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(p, p, rng));
  Eigen::MatrixXd q = qr.householderQ();
  // Sign fix on the diagonal of R makes Q Haar distributed.
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < p; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return Spectrum(sigmas_, std::move(q));
}

FeatureSplit::FeatureSplit(std::vector<int> head, int p)
    : head_(std::move(head)), mask_(static_cast<std::size_t>(p), false), p_(p) {
  for (int j : head_) mask_[static_cast<std::size_t>(j - 1)] = true;
}

FeatureSplit FeatureSplit::contiguous(int k, int p) {
  require(p >= 1, ErrorCode::kBadSplit, "dimension must be positive");
  require(k >= 0 && k <= p, ErrorCode::kBadSplit,
          "k=" + std::to_string(k) + " outside [0, " + std::to_string(p) + "]");
  std::vector<int> head(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) head[static_cast<std::size_t>(j)] = j + 1;
  return FeatureSplit(std::move(head), p);
}

FeatureSplit FeatureSplit::from_indices(std::vector<int> head, int p) {
  require(p >= 1, ErrorCode::kBadSplit, "dimension must be positive");
  std::sort(head.begin(), head.end());
  require(std::adjacent_find(head.begin(), head.end()) == head.end(), ErrorCode::kBadSplit,
          "duplicate head index");
  for (int j : head)
    require(j >= 1 && j <= p, ErrorCode::kBadSplit,
            "head index " + std::to_string(j) + " outside [1, " + std::to_string(p) + "]");
  return FeatureSplit(std::move(head), p);
}

std::vector<int> FeatureSplit::tail() const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(tail_dim()));
  for (int j = 1; j <= p_; ++j)
    if (!mask_[static_cast<std::size_t>(j - 1)]) out.push_back(j);
  return out;
}

bool FeatureSplit::is_contiguous() const {
  for (std::size_t i = 0; i < head_.size(); ++i)
    if (head_[i] != static_cast<int>(i) + 1) return false;
  return true;
}

void GeometryConstants::validate() const {
  require(kappa_dm > 0.0 && kappa_dm <= 1.0, ErrorCode::kInvalidArgument,
          "kappa_dm must lie in (0, 1]");
  require(kappa_iso > 0.0 && kappa_iso < 1.0, ErrorCode::kInvalidArgument,
          "kappa_iso must lie in (0, 1)");
  require(c0 > 0.0, ErrorCode::kInvalidArgument, "c0 must be positive");
  require(b > 0.0, ErrorCode::kInvalidArgument, "b must be positive");
  if (lstar.kind == MeanWidthMethod::Kind::kMonteCarlo)
    require(lstar.n_draws >= 1, ErrorCode::kInvalidArgument, "n_draws must be >= 1");
}

char to_char(Regime regime) {
  switch (regime) {
    case Regime::A: return 'A';
    case Regime::B: return 'B';
    case Regime::C: return 'C';
  }
  return '?';
}

Eigen::VectorXd head_values(const Spectrum& s, const FeatureSplit& split) {
  require_same_dim(s, split);
  Eigen::VectorXd out(split.head_dim());
  for (int i = 0; i < split.head_dim(); ++i) out[i] = s.sigma(split.head()[static_cast<std::size_t>(i)]);
  return out;
}

Eigen::VectorXd tail_values(const Spectrum& s, const FeatureSplit& split) {
  require_same_dim(s, split);
  Eigen::VectorXd out(split.tail_dim());
  Eigen::Index i = 0;
  for (int j = 1; j <= s.dim(); ++j)
    if (!split.in_head(j)) out[i++] = s.sigma(j);
  return out;
}

double tail_trace(const Spectrum& s, const FeatureSplit& split) {
  require_same_dim(s, split);
  require_tail(split);
  return tail_values(s, split).sum();
}

EffectiveRanks effective_ranks(const Spectrum& s, const FeatureSplit& split) {
  require_same_dim(s, split);
  require_tail(split);
  const Eigen::VectorXd tail = tail_values(s, split);
  const double tr = tail.sum();
  return {tr / tail.maxCoeff(), tr * tr / tail.squaredNorm()};
}

double gaussian_mean_width(const Spectrum& s, const FeatureSplit& split,
                           const GeometryConstants& g) {
  require_same_dim(s, split);
  require_tail(split);
  const Eigen::VectorXd tail = tail_values(s, split);
  if (g.lstar.kind == MeanWidthMethod::Kind::kTraceSurrogate) return std::sqrt(tail.sum());

  const Eigen::VectorXd root = tail.cwiseSqrt();
  Rng rng(g.lstar.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double acc = 0.0;
  for (int draw = 0; draw < g.lstar.n_draws; ++draw) {
    double sq = 0.0;
    for (Eigen::Index j = 0; j < root.size(); ++j) {
      const double z = root[j] * normal(rng);
      sq += z * z;
    }
    acc += std::sqrt(sq);
  }
  return acc / g.lstar.n_draws;
}

double dvoretsky_dimension(const Spectrum& s, const FeatureSplit& split,
                           const GeometryConstants& g) {
  const double width = gaussian_mean_width(s, split, g);
  return width * width / tail_values(s, split).maxCoeff();
}

std::optional<int> k_star(const Spectrum& s, int N, const GeometryConstants& g) {
  require(N >= 1, ErrorCode::kInvalidArgument, "N must be >= 1");
  const int p = s.dim();
  // suffix[k] = Tr(Sigma_{k+1:p}), accumulated from the smallest eigenvalue up.
  std::vector<double> suffix(static_cast<std::size_t>(p) + 1, 0.0);
  for (int k = p - 1; k >= 0; --k)
    suffix[static_cast<std::size_t>(k)] = suffix[static_cast<std::size_t>(k) + 1] + s.sigma(k + 1);
  const double target = g.b * N;
  for (int k = 0; k < p; ++k)
    if (suffix[static_cast<std::size_t>(k)] / s.sigma(k + 1) >= target) return k;
  return std::nullopt;
}

std::optional<int> k_double_star_of(const Eigen::VectorXd& head, int N, double c0) {
  const double budget = c0 * N;
  const int k = static_cast<int>(head.size());
  const int k0_max = std::min(static_cast<int>(std::floor(budget)), k);
  if (k0_max < 1) return std::nullopt;
  // partial[k0] = sum_{j=k0}^{k} sigma_j
  std::vector<double> partial(static_cast<std::size_t>(k) + 2, 0.0);
  for (int j = k; j >= 1; --j)
    partial[static_cast<std::size_t>(j)] = partial[static_cast<std::size_t>(j) + 1] + head[j - 1];
  for (int k0 = k0_max; k0 >= 1; --k0) {
    if (partial[static_cast<std::size_t>(k0)] <= (budget - k0 + 1) * head[k0 - 1]) return k0;
  }
  return std::nullopt;
}

std::optional<int> k_double_star(const Spectrum& s, int k, int N, const GeometryConstants& g) {
  require(k >= 1 && k <= s.dim(), ErrorCode::kBadSplit,
          "head dimension k=" + std::to_string(k) + " outside [1, p]");
  require(N >= 1, ErrorCode::kInvalidArgument, "N must be >= 1");
  return k_double_star_of(s.values().head(k), N, g.c0);
}

FixedPoint fixed_point_rn(const Spectrum& s, const FeatureSplit& split, int N,
                          const GeometryConstants& g) {
  require(split.head_dim() > 0, ErrorCode::kBadSplit, "fixed point needs a non-empty head");
  require(N >= 1, ErrorCode::kInvalidArgument, "N must be >= 1");
  const Eigen::VectorXd head = head_values(s, split);
  const double budget = g.c0 * N;
  if (head.size() <= budget) return {0.0, Regime::A, std::nullopt};
  if (auto k2 = k_double_star_of(head, N, g.c0)) {
    return {std::sqrt(head[*k2 - 1]), Regime::B, k2};
  }
  return {std::sqrt(head.sum() / budget), Regime::C, std::nullopt};
}

bool fixed_point_inequality_holds(const Eigen::VectorXd& head, double R, int N, double c0,
                                  double rel_slack) {
  const double r2 = R * R;
  const double lhs = head.cwiseMin(r2).sum();
  const double rhs = c0 * r2 * N;
  return lhs <= rhs * (1.0 + rel_slack);
}

double j1_threshold(const Spectrum& s, const FeatureSplit& split, int N,
                    const GeometryConstants& g) {
  require(N >= 1, ErrorCode::kInvalidArgument, "N must be >= 1");
  const double width = gaussian_mean_width(s, split, g);
  return g.kappa_dm * width * width / N;
}

HeadThresholdSplit split_j1_j2(const Spectrum& s, const FeatureSplit& split, int N,
                               const GeometryConstants& g) {
  HeadThresholdSplit out;
  out.threshold = j1_threshold(s, split, N, g);
  for (int j : split.head()) {
    if (s.sigma(j) >= out.threshold)
      out.j1.push_back(j);
    else
      out.j2.push_back(j);
  }
  return out;
}

Eigen::VectorXd thresholded_inverse_weights(const Spectrum& s, const FeatureSplit& split,
                                            int N, const GeometryConstants& g) {
  const double threshold = j1_threshold(s, split, N, g);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(s.dim());
  for (int j : split.head()) w[j - 1] = 1.0 / std::sqrt(std::max(s.sigma(j), threshold));
  return w;
}

}  // namespace benign
