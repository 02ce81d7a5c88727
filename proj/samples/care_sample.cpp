// Solves a random stable CARE with the decoupled iteration and checks the
// result against the coupled iteration.

#include <cstdio>
#include <iostream>

#include "dsda/dsda.hpp"

int main() {
  const dsda::CareProblem p = dsda::gen_random_care(40, 2, 3, 7, 1.0);

  dsda::SolveConfig cfg;
  cfg.family = dsda::Family::care;
  cfg.method = dsda::Method::dsda;
  const dsda::ConvergenceReport low_rank = dsda::solve_driver(p, cfg);
  dsda::emit_report(low_rank, dsda::ReportFormat::csv, std::cout);

  cfg.method = dsda::Method::sda;
  const dsda::ConvergenceReport dense = dsda::solve_driver(p, cfg);

  const auto& factors = *low_rank.factors;
  std::printf("status %s, basis %ld columns, kernel %ld\n", dsda::to_string(low_rank.status),
              static_cast<long>(factors.left().cols()), static_cast<long>(factors.kernel_dim()));
  std::printf("relative gap to coupled iteration: %.2e\n",
              dsda::relative_error(low_rank.real_solution(), dense.real_solution()));
  return low_rank.status == dsda::Status::Converged ? 0 : 1;
}
