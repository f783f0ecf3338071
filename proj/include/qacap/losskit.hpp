#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "qacap/matrix.hpp"

namespace qacap::loss {

// Probabilities below this are clamped before taking the log.
inline constexpr double kProbFloor = 1e-300;
// Row sums of a probability matrix must be within this of 1.
inline constexpr double kStochasticTol = 1e-9;
inline constexpr double kDefaultLambda = 1.0;

enum class Consistency { LAC, LOC, LBC };

std::string_view to_string(Consistency c);
Consistency consistency_from_string(std::string_view s);

std::vector<double> softmax(std::span<const double> logits);
Matrix softmax_rows(const Matrix& logits);

// -sum_t ln probs(t, targets[t]).
double xe_loss(const Matrix& probs, std::span<const std::size_t> targets);
// Same loss computed from logits through a log-softmax.
double xe_loss_from_logits(const Matrix& logits, std::span<const std::size_t> targets);

// ||A - B||_F.
double frobenius_distance(const Matrix& a, const Matrix& b);

// Consistency between the original and augmented branch.
double lac_loss(const Matrix& latent_orig, const Matrix& latent_aug);
double loc_loss(const Matrix& logits_orig, const Matrix& logits_aug);
double lbc_loss(const Matrix& probs_orig, const Matrix& probs_aug);

struct LossBundle {
    double xe_orig = 0;
    double xe_aug = 0;
    double cons = 0;
    Consistency cons_kind = Consistency::LBC;
    double lambda = kDefaultLambda;
    double total = 0;
};

// total = xe_orig + xe_aug + lambda * cons. lambda = 0 is the dual network
// without consistency.
LossBundle combined_loss(double xe_orig, double xe_aug, double cons, double lambda,
                         Consistency kind = Consistency::LBC);

// Gradients. Each returns matrices shaped like the corresponding inputs.
struct PairGrad {
    Matrix d_first;
    Matrix d_second;
};

// d xe / d logits = softmax(logits) - onehot(targets), row by row.
Matrix grad_xe_logits(const Matrix& logits, std::span<const std::size_t> targets);
// d xe / d probs: -1/p at each target cell, zero elsewhere.
Matrix grad_xe_probs(const Matrix& probs, std::span<const std::size_t> targets);
// (A - B)/||A - B||_F and its negation; both zero when A == B.
PairGrad grad_frobenius(const Matrix& a, const Matrix& b);
// Gradient of lbc_loss(softmax(La), softmax(Lb)) w.r.t. the two logit
// matrices, chaining through the softmax Jacobian.
PairGrad grad_lbc_logits(const Matrix& logits_orig, const Matrix& logits_aug);

// Full dual-branch objective for one caption, evaluated from raw model
// outputs: the consistency term picks latents (LAC), logits (LOC) or softmax
// of logits (LBC).
struct DualBranchInputs {
    Matrix latent_orig, latent_aug;  // any shape, equal to each other
    Matrix logits_orig, logits_aug;  // T x V
    std::vector<std::size_t> targets;  // length T
};

struct DualBranchGrad {
    Matrix d_latent_orig, d_latent_aug;
    Matrix d_logits_orig, d_logits_aug;
};

LossBundle dual_branch_loss(const DualBranchInputs& in, Consistency kind, double lambda);
DualBranchGrad dual_branch_grad(const DualBranchInputs& in, Consistency kind, double lambda);

}  // namespace qacap::loss
