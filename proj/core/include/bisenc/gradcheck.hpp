// Central finite-difference verification of every analytic gradient path:
// the encoder through chunk pooling, dropout and the shared-space projection;
// the two-tower hinge objective end to end; and the joint model under both
// the NCE and the exact softmax losses. The checks only ever call forward
// code, so they stay independent of the backward implementations they test.
#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "bisenc/linalg.hpp"

namespace bisenc {

struct GradCheckResult {
  std::string group;
  double max_rel_err = 0.0;
  std::size_t entries = 0;
  bool pass = false;
};

struct GradCheckReport {
  std::string title;
  std::vector<GradCheckResult> groups;
  double tolerance = 1e-4;
  bool all_pass = false;
};

// Central differences over every entry of every view; analytic[k] must hold
// the gradient for views[k] in the same order.
GradCheckReport run_gradient_check(const std::string& title, std::vector<ParamView> views,
                                   const std::vector<const double*>& analytic,
                                   const std::function<double()>& loss, double eps,
                                   double tolerance);

GradCheckReport check_encoder_gradients(std::uint64_t seed, double eps = 1e-5,
                                        double tolerance = 1e-4);
GradCheckReport check_bilingual_gradients(std::uint64_t seed, double eps = 1e-5,
                                          double tolerance = 1e-4);
GradCheckReport check_joint_gradients(std::uint64_t seed, double eps = 1e-5,
                                      double tolerance = 1e-4);

// All three reports with one line per parameter group written to out.
bool run_all_gradient_checks(std::uint64_t seed, std::ostream& out);

void print_report(std::ostream& out, const GradCheckReport& report);

}  // namespace bisenc
