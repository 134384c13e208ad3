#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "cpr/errors.hpp"

namespace cpr {

/// Rate of return r(x) and constraint probability p(x) as functions of the
/// slackness x, bound to a team's total service capacity mu_T^S.
///
/// Implementations provide analytic derivatives. p must equal 1 for x <= 0.
template <typename Scalar>
class ReturnModel {
 public:
  virtual ~ReturnModel() = default;

  virtual Scalar r(Scalar x) const = 0;
  virtual Scalar dr(Scalar x) const = 0;
  virtual Scalar d2r(Scalar x) const = 0;
  virtual Scalar p(Scalar x) const = 0;
  virtual Scalar dp(Scalar x) const = 0;
  virtual Scalar d2p(Scalar x) const = 0;

  /// Right end of the domain, mu_T^S.
  virtual Scalar domain_end() const = 0;

  virtual std::string family() const = 0;
  /// Named parameters, for serialization.
  virtual std::vector<std::pair<std::string, Scalar>> parameters() const = 0;
};

/// r(x) = A (1 - exp(B (x - mu_T^S))),  p(x) = exp(-B x) for x > 0, 1 otherwise.
template <typename Scalar>
class ExponentialModel final : public ReturnModel<Scalar> {
 public:
  ExponentialModel(Scalar A, Scalar B, Scalar mu_total_s)
      : A_(A), B_(B), end_(mu_total_s) {
    using std::isfinite;
    if (!isfinite(A) || !isfinite(B) || !isfinite(mu_total_s)) {
      throw StructuralError("exponential model parameters must be finite");
    }
    if (!(mu_total_s > Scalar(0))) {
      throw StructuralError("exponential model needs mu_T^S > 0");
    }
  }

  Scalar r(Scalar x) const override {
    using std::expm1;
    // expm1 keeps r(mu_T^S) == 0 exactly.
    return -A_ * expm1(B_ * (x - end_));
  }
  Scalar dr(Scalar x) const override {
    using std::exp;
    return -A_ * B_ * exp(B_ * (x - end_));
  }
  Scalar d2r(Scalar x) const override {
    using std::exp;
    return -A_ * B_ * B_ * exp(B_ * (x - end_));
  }
  Scalar p(Scalar x) const override {
    using std::exp;
    return x > Scalar(0) ? exp(-B_ * x) : Scalar(1);
  }
  Scalar dp(Scalar x) const override {
    using std::exp;
    return x > Scalar(0) ? -B_ * exp(-B_ * x) : Scalar(0);
  }
  Scalar d2p(Scalar x) const override {
    using std::exp;
    return x > Scalar(0) ? B_ * B_ * exp(-B_ * x) : Scalar(0);
  }

  Scalar domain_end() const override { return end_; }
  std::string family() const override { return "exponential"; }
  std::vector<std::pair<std::string, Scalar>> parameters() const override {
    return {{"A", A_}, {"B", B_}};
  }

  Scalar A() const { return A_; }
  Scalar B() const { return B_; }

 private:
  Scalar A_;
  Scalar B_;
  Scalar end_;
};

/// Builds a model once the team's mu_T^S is known.
template <typename Scalar>
using ModelFactory =
    std::function<std::shared_ptr<const ReturnModel<Scalar>>(Scalar mu_total_s)>;

/// Defaults are the constants of the experimental family (A = 5, B = 0.5).
template <typename Scalar = double>
ModelFactory<Scalar> exponential_model(Scalar A = Scalar(5), Scalar B = Scalar(0.5)) {
  return [A, B](Scalar mu_total_s) -> std::shared_ptr<const ReturnModel<Scalar>> {
    return std::make_shared<ExponentialModel<Scalar>>(A, B, mu_total_s);
  };
}

}  // namespace cpr
