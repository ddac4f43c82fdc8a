#pragma once

#include <functional>
#include <string>

#include "polling/config.hpp"
#include "polling/errors.hpp"
#include "polling/model.hpp"

namespace polling {

struct EvalOptions {
    // Stop an infinite product once the current factor differs from 1 by less.
    double product_tol = 1e-12;
    // Hard cap on the product/recursion index; hitting it raises ConvergenceError.
    int max_depth = 400;
    // Residual bound for busy-period fixed points.
    double fixpoint_tol = 1e-13;
    long fixpoint_max_iter = 100000;
    // Relative step for finite-difference moments.
    double fd_step = 1e-4;
};

// An evaluable scalar transform: an LST on s >= 0 or a PGF on z in [0, 1],
// carrying its admissible argument range and evaluation options. Values lie
// in [0, 1] on the stated domain and equal 1 at the identity point (s = 0,
// z = 1). Handles are immutable and safe to share between threads.
class TransformHandle {
public:
    enum class Kind { Lst, Pgf };

    TransformHandle(Kind kind, std::string name, std::function<double(double)> eval,
                    double arg_min, double arg_max, EvalOptions options);

    // Domain-checked evaluation; throws DomainError outside [arg_min, arg_max].
    double operator()(double arg) const;

    // Evaluation without the domain check. Moment extraction steps slightly
    // past the identity point, where every transform here extends analytically.
    double evaluate_unchecked(double arg) const { return eval_(arg); }

    Kind kind() const noexcept { return kind_; }
    const std::string& name() const noexcept { return name_; }
    double identity_point() const noexcept { return kind_ == Kind::Lst ? 0.0 : 1.0; }
    double arg_min() const noexcept { return arg_min_; }
    double arg_max() const noexcept { return arg_max_; }
    const EvalOptions& options() const noexcept { return options_; }

private:
    Kind kind_;
    std::string name_;
    std::function<double(double)> eval_;
    double arg_min_;
    double arg_max_;
    EvalOptions options_;
};

// k-th raw moment (k in {1, 2}) of the random variable behind a handle, by
// Richardson-extrapolated central differences at the identity point; second
// moments use a five-point stencil. PGF factorial moments are converted to
// raw moments. Throws NumericalError when the estimate is non-finite or a
// first moment comes out negative.
double transform_moment(const TransformHandle& handle, int k);

// Numerically evaluates the exact transforms of the two-queue priority
// polling model: busy periods, completion time, switch-over and busy-period
// arrival PGFs, the polling-epoch PGFs (descendant-set infinite products),
// cycle/intervisit LSTs, per-class waiting-time LSTs and the joint
// queue-length PGF at an arbitrary time.
//
// All methods are pure functions of immutable state; instances can be used
// concurrently from any number of threads.
class TransformEngine {
public:
    explicit TransformEngine(SystemConfig config, EvalOptions options = {});

    const SystemConfig& config() const noexcept { return config_; }
    const DerivedModel& model() const noexcept { return model_; }
    const EvalOptions& options() const noexcept { return options_; }

    // --- busy periods and completion time -------------------------------

    // theta_i for the aggregated queues: the minimal root of
    // x = B~(s + lambda (1 - x)).
    double busy_period(QueueId queue, double s) const;
    // theta_H, theta_{L'} (completion-time busy period), theta_2.
    double busy_period(CustomerClass cls, double s) const;
    // B~_{L'}(s) = B~_L(s + lambda_H (1 - theta~_H(s))).
    double completion_time(double s) const;

    // --- building blocks -------------------------------------------------

    // K~_ij(z) = theta~_i(lambda_j (1 - z)), i, j in {1, 2}.
    double arrivals_pgf(int i, int j, double z) const;
    // M~_ij(z1, z2) = S~_ij(lambda_1 (1 - z1) + lambda_2 (1 - z2)).
    double switchover_pgf(int i, int j, double z1, double z2) const;

    // --- polling-epoch PGFs ----------------------------------------------

    // V~_{b_i}(z1, z2): joint (type-1, type-2) counts at a polling epoch.
    double polling_epoch_pgf(QueueId queue, double z1, double z2) const;
    // Priority refinement V~_{b_i}(zH, zL, z2), obtained by substituting
    // z1 -> (lambda_H zH + lambda_L zL) / lambda_1.
    double priority_epoch_pgf(QueueId queue, double zh, double zl, double z2) const;

    // --- descendant-set transforms ---------------------------------------

    // H~_1 as the infinite product of R~_1/R~_2 factors over generations.
    double dsa_h1(double z) const;
    // H~_1 in the deterministic-switch-over (exponential) form.
    double dsa_h1_deterministic(double z) const;
    // G~_1 = H~_1(z) (1 - r11 M~_11(z,1)) / r21.
    double dsa_g1(double z) const;
    // G~_1 in the direct product form M~_21(z,1) prod_j a_2(f_2^(j)(z)).
    double dsa_g1_product(double z) const;
    // K~ in the direct generation form (deterministic switch-overs).
    double dsa_k_direct(double z) const;
    // K~ composed as H~_1((lambda_H theta~_H(lambda_L(1-z)) + lambda_L z)/lambda_1),
    // using the deterministic H~_1 form.
    double dsa_k_composed(double z) const;

    // --- cycle and intervisit times --------------------------------------

    double cycle_time(QueueId queue, double s) const;
    double intervisit_time(QueueId queue, double s) const;
    // Largest admissible s for the cycle-time LST (the PGF argument
    // theta~_i(s) - s/lambda_i leaves [0, 1] beyond it).
    double cycle_admissible_max(QueueId queue) const;
    double intervisit_admissible_max(QueueId queue) const;

    // --- waiting times ----------------------------------------------------

    double waiting_time(CustomerClass cls, double s) const;
    // Alternative route through G~_1 for classes H and L (class 2 falls back
    // to the primary form); used as an internal cross-check.
    double waiting_time_alt(CustomerClass cls, double s) const;
    double waiting_admissible_max(CustomerClass cls) const;

    // --- joint queue length at an arbitrary time ---------------------------

    // L~(zH, zL, z2); counts customers in system (waiting plus in service).
    double arbitrary_time_pgf(double zh, double zl, double z2) const;
    // E[number of class-c customers in system] via finite differences of L~.
    double mean_number_in_system(CustomerClass cls) const;
    // E[number waiting] = E[number in system] - rho_c.
    double mean_number_waiting(CustomerClass cls) const;

    // --- moments and closed-form means --------------------------------------

    double mean_cycle_time(QueueId queue) const;       // sigma / (pi_i (1 - rho))
    double mean_intervisit_time(QueueId queue) const;  // (1 - rho_i) E C_i
    double mean_waiting_time(CustomerClass cls) const; // numeric moment of W~
    double mean_busy_period(QueueId queue) const;      // E B_i / (1 - rho_i)

    // --- handles -------------------------------------------------------------

    TransformHandle busy_period_handle(QueueId queue) const;
    TransformHandle busy_period_handle(CustomerClass cls) const;
    TransformHandle completion_time_handle() const;
    TransformHandle cycle_time_handle(QueueId queue) const;
    TransformHandle intervisit_handle(QueueId queue) const;
    TransformHandle waiting_time_handle(CustomerClass cls) const;
    TransformHandle dsa_g1_handle() const;
    TransformHandle dsa_h1_handle() const;
    TransformHandle dsa_k_handle() const;

private:
    // Busy-period deficits 1 - theta~(s): the recursions run on deficits so
    // that values vanishing geometrically keep full relative precision.
    double theta1_deficit(double s) const;
    double theta2_deficit(double s) const;
    double thetaH_deficit(double s) const;
    double thetaLp_deficit(double s) const;
    double completion_deficit(double s) const;
    double theta1(double s) const { return 1.0 - theta1_deficit(s); }
    double theta2(double s) const { return 1.0 - theta2_deficit(s); }
    double thetaH(double s) const { return 1.0 - thetaH_deficit(s); }
    double thetaLp(double s) const { return 1.0 - thetaLp_deficit(s); }
    double switchover_lst(int i, int j, double u) const;
    double r1_tilde(double u) const;
    double r2_tilde(double u) const;
    double product_a1(double z2) const;
    double product_a2(double z1) const;
    double dsa_h1_from_deficit(double y) const;
    double dsa_h1_deterministic_from_deficit(double y) const;
    double mixture_arg(double zh, double zl) const;
    double lambda_of(double zh, double zl, double z2) const;

    SystemConfig config_;
    DerivedModel model_;
    EvalOptions options_;
};

}  // namespace polling
