#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fractalnet/box_dim.hpp"
#include "fractalnet/errors.hpp"
#include "fractalnet/random.hpp"

namespace fractalnet {

enum class SimilarityKind { kCosine, kDot };

// Row n of z and z_renorm embed graph n and its renormalised view.
struct EmbeddingBatch {
  Eigen::MatrixXd z;
  Eigen::MatrixXd z_renorm;

  std::size_t size() const { return static_cast<std::size_t>(z.rows()); }

  void validate() const {
    if (z.rows() != z_renorm.rows() || z.cols() != z_renorm.cols()) {
      throw ArgumentError("embedding shapes differ: z is " + std::to_string(z.rows()) + "x" +
                          std::to_string(z.cols()) + ", z_renorm is " + std::to_string(z_renorm.rows()) +
                          "x" + std::to_string(z_renorm.cols()));
    }
    if (!z.allFinite() || !z_renorm.allFinite()) throw ArgumentError("embeddings contain non-finite entries");
  }
};

struct LossConfig {
  double alpha = 0.1;
  double tau = 0.4;
  double sigma = kDefaultPilotSigma;
  double r2_threshold = 0.9;
  Distance diam_gate = kDefaultDiameterGate;
  std::uint64_t seed = 0;
  double anneal_fraction = 0.0;
  SimilarityKind similarity = SimilarityKind::kCosine;
  // Exact loss only: use sim(z_n, z_k) instead of sim(z_n, z_k^R) for negatives.
  bool anchor_anchor_denominator = false;
  // Surrogate only: sample G for i < j and mirror it.
  bool symmetric_perturbation = false;

  void validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ArgumentError("alpha must be finite and >= 0");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ArgumentError("tau must be finite and > 0");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ArgumentError("sigma must be finite and > 0");
    if (!(anneal_fraction >= 0.0 && anneal_fraction <= 1.0)) {
      throw ArgumentError("anneal_fraction must lie in [0, 1]");
    }
  }
};

// Cached box-dimension results for one graph of the batch.
struct GraphMeta {
  std::uint64_t graph_id = 0;
  Distance diameter = 0;
  double dimension = 0.0;
  double r_squared = 0.0;
  bool gated = false;
};

inline bool fallback_gated(const GraphMeta& meta, const LossConfig& cfg) {
  return meta.gated || meta.diameter <= cfg.diam_gate || meta.r_squared < cfg.r2_threshold;
}

struct LossReport {
  Eigen::VectorXd per_sample_loss;
  double mean_loss = 0.0;
  Eigen::MatrixXd similarity;            // S
  Eigen::MatrixXd perturbed_similarity;  // S*, with loss_n = -log softmax_{k != n}(S*/tau)
  Eigen::MatrixXd perturbation;          // G (surrogate only)
  Eigen::VectorXd effective_alpha;
};

inline Eigen::MatrixXd similarity_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                         SimilarityKind kind) {
  if (kind == SimilarityKind::kDot) return a * b.transpose();
  auto normalized = [](const Eigen::MatrixXd& m, const char* which) {
    Eigen::MatrixXd out = m;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double norm = m.row(i).norm();
      if (!(norm > 0.0)) {
        throw ArgumentError(std::string("zero-norm embedding row ") + std::to_string(i) + " in " + which);
      }
      out.row(i) /= norm;
    }
    return out;
  };
  Eigen::MatrixXd s = normalized(a, "z") * normalized(b, "z_renorm").transpose();
  return s.cwiseMax(-1.0).cwiseMin(1.0);
}

inline Eigen::MatrixXd cosine_similarity_matrix(const EmbeddingBatch& batch) {
  batch.validate();
  return similarity_matrix(batch.z, batch.z_renorm, SimilarityKind::kCosine);
}

// loss_n = -L_nn + log sum_{k != n} exp(L_nk), evaluated stably.
inline Eigen::VectorXd contrastive_from_logits(const Eigen::MatrixXd& logits) {
  const Eigen::Index n = logits.rows();
  if (n < 2 || logits.cols() != n) throw ArgumentError("contrastive loss needs a square batch of N >= 2");
  Eigen::VectorXd loss(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double peak = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != i) peak = std::max(peak, logits(i, k));
    }
    double sum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k != i) sum += std::exp(logits(i, k) - peak);
    }
    loss(i) = -logits(i, i) + peak + std::log(sum);
  }
  if (!loss.allFinite()) throw NumericError("contrastive loss is not finite");
  return loss;
}

// Plain InfoNCE over a similarity matrix, positives on the diagonal.
inline Eigen::VectorXd info_nce_loss(const Eigen::MatrixXd& similarity, double tau) {
  if (!(tau > 0.0)) throw ArgumentError("tau must be > 0");
  return contrastive_from_logits(similarity / tau);
}

// ---------------------------------------------------------------------------
// Exact fractal-weighted loss: positives weighted by exp(alpha |dim G_n - dim R(G_n)|),
// negatives by exp(alpha |dim R(G_n) - dim R'(G_k)|).
// ---------------------------------------------------------------------------

struct DimensionTriple {
  double dim_graph = 0.0;
  double dim_renorm = 0.0;
  std::optional<double> dim_renorm_alt;  // independent second renormalisation; defaults to dim_renorm

  double renorm_alt() const { return dim_renorm_alt.value_or(dim_renorm); }
  double gap() const { return dim_graph - dim_renorm; }
};

inline Eigen::MatrixXd exact_fractal_logits(const Eigen::MatrixXd& positive_sim, const Eigen::MatrixXd& negative_sim,
                                            std::span<const DimensionTriple> dims, double alpha, double tau) {
  const Eigen::Index n = positive_sim.rows();
  if (static_cast<std::size_t>(n) != dims.size()) {
    throw ArgumentError("exact fractal loss: " + std::to_string(dims.size()) + " dimension records for " +
                        std::to_string(n) + " samples");
  }
  Eigen::MatrixXd logits(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& di = dims[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == i) {
        logits(i, i) = positive_sim(i, i) / tau + alpha * std::abs(di.gap());
      } else {
        const double cross = std::abs(di.dim_renorm - dims[static_cast<std::size_t>(k)].renorm_alt());
        logits(i, k) = negative_sim(i, k) / tau + alpha * cross;
      }
    }
  }
  return logits;
}

inline LossReport exact_fractal_loss_from_similarity(const Eigen::MatrixXd& similarity,
                                                     const Eigen::MatrixXd& negative_similarity,
                                                     std::span<const DimensionTriple> dims, const LossConfig& cfg) {
  cfg.validate();
  if (similarity.rows() < 2) throw ArgumentError("exact fractal loss needs N >= 2");
  LossReport report;
  report.similarity = similarity;
  report.per_sample_loss =
      contrastive_from_logits(exact_fractal_logits(similarity, negative_similarity, dims, cfg.alpha, cfg.tau));
  report.mean_loss = report.per_sample_loss.mean();
  report.perturbed_similarity = similarity;
  report.perturbation = Eigen::MatrixXd::Zero(similarity.rows(), similarity.cols());
  report.effective_alpha = Eigen::VectorXd::Constant(similarity.rows(), cfg.alpha);
  return report;
}

inline LossReport exact_fractal_loss(const EmbeddingBatch& batch, std::span<const DimensionTriple> dims,
                                     const LossConfig& cfg) {
  batch.validate();
  if (batch.size() < 2) throw ArgumentError("exact fractal loss needs N >= 2");
  const Eigen::MatrixXd s = similarity_matrix(batch.z, batch.z_renorm, cfg.similarity);
  if (cfg.anchor_anchor_denominator) {
    return exact_fractal_loss_from_similarity(s, similarity_matrix(batch.z, batch.z, cfg.similarity), dims, cfg);
  }
  return exact_fractal_loss_from_similarity(s, s, dims, cfg);
}

// ---------------------------------------------------------------------------
// Gaussian surrogate: G_ii ~ N(0, k2(D_i)), G_ij ~ N(|dim_i - dim_j|, k2(D_i) + k2(D_j)).
// Entry (i, j) of epoch e is drawn from Philox counter (e, id_i, id_j) keyed by
// the seed, so values follow graph ids rather than batch positions.
// ---------------------------------------------------------------------------

inline Philox4x32::Counter perturbation_counter(std::uint64_t epoch, std::uint64_t id_i, std::uint64_t id_j) {
  const auto hi = [](std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); };
  return {static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(id_i), static_cast<std::uint32_t>(id_j),
          hi(id_i) ^ std::rotl(hi(id_j), 16) ^ hi(epoch)};
}

inline Eigen::VectorXd effective_alpha(std::span<const GraphMeta> meta, const LossConfig& cfg) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(meta.size()));
  for (std::size_t i = 0; i < meta.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = fallback_gated(meta[i], cfg) ? 0.0 : cfg.alpha;
  }
  return out;
}

// Entries involving a graph whose diameter leaves k2 undefined are 0; such a
// graph must be gated.
inline Eigen::MatrixXd perturbation_matrix(std::span<const GraphMeta> meta, const LossConfig& cfg,
                                           std::uint64_t epoch = 0) {
  const auto n = static_cast<Eigen::Index>(meta.size());
  std::vector<std::optional<double>> kappa2(meta.size());
  for (std::size_t i = 0; i < meta.size(); ++i) {
    if (meta[i].diameter >= 2) {
      kappa2[i] = kappa_squared(meta[i].diameter, cfg.sigma);
    } else if (!fallback_gated(meta[i], cfg)) {
      throw std::logic_error("ungated graph " + std::to_string(meta[i].graph_id) + " has diameter < 2");
    }
  }
  const Philox4x32 gen(cfg.seed);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& mi = meta[static_cast<std::size_t>(i)];
    const auto& ki = kappa2[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& mj = meta[static_cast<std::size_t>(j)];
      const auto& kj = kappa2[static_cast<std::size_t>(j)];
      if (!ki || !kj) continue;
      if (cfg.symmetric_perturbation && j < i) {
        g(i, j) = g(j, i);
        continue;
      }
      const double z = counter_normal(gen, perturbation_counter(epoch, mi.graph_id, mj.graph_id));
      if (i == j) {
        g(i, i) = std::sqrt(*ki) * z;
      } else {
        g(i, j) = std::abs(mi.dimension - mj.dimension) + std::sqrt(*ki + *kj) * z;
      }
    }
  }
  return g;
}

/// Surrogate fractal loss: logits S/tau + a_ij G_ij, where a_ij = alpha unless
/// graph i or j is gated (a_ii = alpha unless i is gated).
inline LossReport surrogate_fractal_loss(const EmbeddingBatch& batch, std::span<const GraphMeta> meta,
                                         const LossConfig& cfg, std::uint64_t epoch = 0) {
  cfg.validate();
  batch.validate();
  if (batch.size() < 2) throw ArgumentError("surrogate loss needs N >= 2");
  if (meta.size() != batch.size()) {
    throw ArgumentError("surrogate loss: " + std::to_string(meta.size()) + " meta rows for " +
                        std::to_string(batch.size()) + " samples");
  }
  LossReport report;
  report.similarity = similarity_matrix(batch.z, batch.z_renorm, cfg.similarity);
  report.effective_alpha = effective_alpha(meta, cfg);
  report.perturbation = perturbation_matrix(meta, cfg, epoch);

  const Eigen::Index n = report.similarity.rows();
  Eigen::MatrixXd weight(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      weight(i, j) = std::min(report.effective_alpha(i), report.effective_alpha(j));
    }
  }
  const Eigen::MatrixXd noise = weight.cwiseProduct(report.perturbation);
  report.per_sample_loss = contrastive_from_logits(report.similarity / cfg.tau + noise);
  report.mean_loss = report.per_sample_loss.mean();
  report.perturbed_similarity = report.similarity + cfg.tau * noise;
  return report;
}

// ---------------------------------------------------------------------------
// Gradient scaling check and annealing.
// ---------------------------------------------------------------------------

struct GradientRatio {
  double measured_ratio = 0.0;       // d loss_fractal / ds over d loss_InfoNCE / ds
  double expected_w = 0.0;           // exp(alpha |Delta_n|)
  double relative_error = 0.0;       // |measured / expected - 1|
  double positive_term_ratio = 0.0;  // same ratio for the weighted positive term exp(L_nn)
};

/// Central finite differences with respect to s = S_nn, all other entries fixed.
inline GradientRatio lemma_gradient_ratio(const EmbeddingBatch& batch, std::span<const DimensionTriple> dims,
                                          const LossConfig& cfg, std::size_t n, double step = 1e-5) {
  cfg.validate();
  batch.validate();
  if (n >= batch.size()) throw ArgumentError("lemma_gradient_ratio: sample index out of range");
  const Eigen::MatrixXd s = similarity_matrix(batch.z, batch.z_renorm, cfg.similarity);
  const Eigen::MatrixXd negatives =
      cfg.anchor_anchor_denominator ? similarity_matrix(batch.z, batch.z, cfg.similarity) : s;
  const auto idx = static_cast<Eigen::Index>(n);

  auto loss_at = [&](double alpha, double ds) {
    Eigen::MatrixXd shifted = s;
    shifted(idx, idx) += ds;
    return contrastive_from_logits(exact_fractal_logits(shifted, negatives, dims, alpha, cfg.tau))(idx);
  };
  auto positive_at = [&](double alpha, double ds) {
    return std::exp((s(idx, idx) + ds) / cfg.tau + alpha * std::abs(dims[n].gap()));
  };
  auto central = [&](auto&& f, double alpha) { return (f(alpha, step) - f(alpha, -step)) / (2.0 * step); };

  const double d_fractal = central(loss_at, cfg.alpha);
  const double d_plain = central(loss_at, 0.0);
  const double p_fractal = central(positive_at, cfg.alpha);
  const double p_plain = central(positive_at, 0.0);
  if (!std::isfinite(d_fractal) || !std::isfinite(d_plain) || d_plain == 0.0 || p_plain == 0.0) {
    throw NumericError("lemma_gradient_ratio: finite difference is not usable at step " + std::to_string(step));
  }
  GradientRatio out;
  out.measured_ratio = std::abs(d_fractal) / std::abs(d_plain);
  out.expected_w = std::exp(cfg.alpha * std::abs(dims[n].gap()));
  out.relative_error = std::abs(out.measured_ratio / out.expected_w - 1.0);
  out.positive_term_ratio = std::abs(p_fractal) / std::abs(p_plain);
  return out;
}

// Linear decay alpha * (1 - fraction * epoch / (total - 1)).
inline double anneal_alpha(const LossConfig& cfg, std::size_t epoch, std::size_t total_epochs) {
  if (total_epochs == 0) throw ArgumentError("anneal_alpha: total_epochs must be >= 1");
  if (epoch >= total_epochs) {
    throw ArgumentError("anneal_alpha: epoch " + std::to_string(epoch) + " outside [0, " +
                        std::to_string(total_epochs) + ")");
  }
  if (total_epochs == 1) return cfg.alpha;
  const double progress = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  return cfg.alpha * (1.0 - cfg.anneal_fraction * progress);
}

}  // namespace fractalnet
