#include <ostream>
#include <stdexcept>

#include "optmtp/lp.hpp"

namespace optmtp {

// CPLEX-LP text format. Variables are named x<index> in canonical order.
void export_lp_text(const SparseLp& lp, std::ostream& os) {
  if (lp.n_v() > 200000) {
    throw std::invalid_argument("export_lp_text: instance too large for text export");
  }
  os.precision(17);
  os << "\\ block-sparse discretized testing problem\n";
  os << "Maximize\n obj:";
  for (std::size_t j = 0; j < lp.c.size(); ++j) {
    if (lp.c[j] == 0.0) continue;
    os << (lp.c[j] >= 0 ? " +" : " ") << lp.c[j] << " x" << j;
  }
  os << "\nSubject To\n";
  const int nf = lp.n_free();
  for (std::size_t i = 0; i < lp.rows.size(); ++i) {
    const DenseRow& row = lp.rows[i];
    os << " d" << i << ":";
    for (std::size_t r = 0; r < row.cell_prob.size(); ++r) {
      if (row.cell_prob[r] == 0.0) continue;
      for (int j = 0; j < nf; ++j) {
        const double a = row.coeff(r, j);
        if (a == 0.0) continue;
        os << (a >= 0 ? " +" : " ") << a << " x" << lp.var(r, j);
      }
    }
    os << " <= " << row.rhs << "\n";
  }
  for (std::size_t r = 0; r < lp.grid.size(); ++r) {
    os << " s" << r << ":";
    for (int j = 0; j < nf; ++j) os << " + x" << lp.var(r, j);
    os << " <= 1\n";
  }
  os << "Bounds\n";
  for (std::size_t j = 0; j < lp.n_v(); ++j) {
    os << " 0 <= x" << j << " <= 1\n";
  }
  os << "End\n";
}

}  // namespace optmtp
