#pragma once

#include <stdexcept>
#include <string>

namespace rehearsal {

struct error : std::runtime_error {
  explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// configuration violates a structural invariant; message names the field
struct config_invalid : error {
  config_invalid(const std::string& field, const std::string& why)
      : error("invalid config: field '" + field + "': " + why), field(field) {}
  std::string field;
};

struct infeasible_gap : error {
  explicit infeasible_gap(const std::string& msg) : error("infeasible gap: " + msg) {}
};

struct dimension_too_small : error {
  explicit dimension_too_small(const std::string& msg) : error("dimension too small: " + msg) {}
};

struct singular_gram : error {
  explicit singular_gram(double cond)
      : error("gram system condition estimate " + std::to_string(cond) + " exceeds cond_max"),
        cond(cond) {}
  double cond;
};

struct permutation_invalid : error {
  explicit permutation_invalid(const std::string& msg) : error("bad revisit order: " + msg) {}
};

struct partition_invalid : error {
  explicit partition_invalid(const std::string& msg) : error("bad buffer partition: " + msg) {}
};

struct too_few_tasks : error {
  explicit too_few_tasks(const std::string& msg) : error(msg) {}
};

struct dimension_mismatch : error {
  explicit dimension_mismatch(const std::string& msg) : error("dimension mismatch: " + msg) {}
};

struct denominator_domain : error {
  explicit denominator_domain(const std::string& msg) : error("denominator out of domain: " + msg) {}
};

struct nonzero_sigma : error {
  explicit nonzero_sigma() : error("three-task closed forms are only defined at sigma = 0") {}
};

struct shape_mismatch : error {
  explicit shape_mismatch(const std::string& msg) : error("shape mismatch: " + msg) {}
};

struct too_many_degenerate_draws : error {
  too_many_degenerate_draws(long failures, long trials)
      : error("aborting batch: " + std::to_string(failures) + " degenerate draws out of " +
              std::to_string(trials) + " trials") {}
};

struct unsupported_order : error {
  explicit unsupported_order(const std::string& msg) : error(msg) {}
};

}  // namespace rehearsal
