// Simulates the default problem, runs the smooth lasso path and picks a knot by GCV.

#include <cstdio>

#include "mpls/mpls.hpp"

int main()
{
    using namespace mpls;
    const SimTruth truth = make_truth(200);
    SimConfig sim;
    sim.n = 100;
    sim.seed = 42;
    const SimSample sample = generate(sim, truth);

    const Variant variant = Variant::smooth(VariantTag::SLASSO, 3000.0);
    const WorkingProblem wp = working_problem(sample.problem, variant);
    const auto path = amnr_path(wp);
    const Selection sel = select_knot(sample.problem, wp, path);

    std::printf("knots: %zu\n", path.size());
    std::printf("selected knot %zu at lambda %.6g, df %.3f\n", sel.index, sel.lambda, sel.curve[sel.index].df);
    const auto kkt = kkt_check(wp, path[sel.index].working, sel.lambda);
    std::printf("kkt active gap %.3g, inactive excess %.3g\n", kkt.max_active_gap, kkt.max_inactive_excess);
    std::printf("AUC %.4f  RE %.4f\n", support_auc(truth.beta_true, sel.solution.beta),
                relative_error(truth.beta_true, sel.solution.beta));

    // Compare with the ridge fit on the same data.
    const auto ridge = select_ridge(sample.problem, LinearOperator::identity(200),
                                    lambda_grid(sample.problem, 50, GridMode::singular_value_scaled));
    std::printf("Ridge_I: AUC %.4f  RE %.4f\n", support_auc(truth.beta_true, ridge.solution.beta),
                relative_error(truth.beta_true, ridge.solution.beta));
}
