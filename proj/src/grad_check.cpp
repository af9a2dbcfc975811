#include "rnnpool/grad_check.hpp"

#include <cmath>

namespace rnnpool {

namespace {

double eval(const std::function<Tensor(Tape&)>& build) {
  Tape tape;
  return build(tape).scalar();
}

}  // namespace

GradCheckReport finite_difference_check(const std::function<Tensor(Tape&)>& build,
                                        const std::vector<Parameter*>& params,
                                        double step, double tol) {
  GradCheckReport report;

  std::vector<Matrix> analytic;
  {
    for (Parameter* p : params) p->zero_grad();
    Tape tape;
    Tensor loss = build(tape);
    tape.backward(loss);
    for (Parameter* p : params) analytic.push_back(p->grad);
    for (Parameter* p : params) p->zero_grad();
  }

  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    GradCheckEntry entry;
    entry.name = p.name;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.cols(); ++j) {
        const double saved = p.value(i, j);
        p.value(i, j) = saved + step;
        const double up = eval(build);
        p.value(i, j) = saved - step;
        const double down = eval(build);
        p.value(i, j) = saved;
        const double fd = (up - down) / (2.0 * step);
        const double ad = analytic[pi](i, j);
        const double rel = std::abs(ad - fd) / std::max({1.0, std::abs(ad), std::abs(fd)});
        entry.max_rel_err = std::max(entry.max_rel_err, rel);
      }
    }
    entry.pass = entry.max_rel_err <= tol;
    report.worst_rel_err = std::max(report.worst_rel_err, entry.max_rel_err);
    report.pass = report.pass && entry.pass;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace rnnpool
