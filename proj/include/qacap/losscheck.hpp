#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qacap/losskit.hpp"

namespace qacap::loss {

struct CheckOptions {
    std::uint64_t seed = 0;
    std::size_t cases = 100;
    std::size_t max_rows = 16;
    std::size_t max_cols = 32;
    double step = 1e-5;           // central-difference step
    double gradient_tol = 1e-5;   // relative error bound for gradients
    double property_tol = 1e-12;  // bound for algebraic properties
    std::optional<double> lambda; // consistency weight; random per case when unset
};

// Analytic gradients under test. Defaults point at the library; tests swap in
// broken versions to make sure the checker notices.
struct GradientSet {
    std::function<Matrix(const Matrix&, std::span<const std::size_t>)> xe_logits = grad_xe_logits;
    std::function<PairGrad(const Matrix&, const Matrix&)> frobenius = grad_frobenius;
    std::function<PairGrad(const Matrix&, const Matrix&)> lbc_logits = grad_lbc_logits;
    std::function<DualBranchGrad(const DualBranchInputs&, Consistency, double)> dual_branch =
        dual_branch_grad;
};

struct CheckResult {
    std::string name;
    bool passed = true;
    double worst = 0.0;  // largest error seen
    double tolerance = 0.0;
    std::size_t trials = 0;
};

// ||a - b|| / (||a|| + ||b||), 0 when both vanish.
double relative_error(std::span<const double> analytic, std::span<const double> numeric);

// Central finite-difference gradient of `f` with respect to every entry of
// `x`; `x` is restored before returning.
Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, Matrix& x, double step);

// Runs every gradient and property check on seeded random inputs.
std::vector<CheckResult> run_loss_checks(const CheckOptions& options,
                                         const GradientSet& grads = {});

}  // namespace qacap::loss
