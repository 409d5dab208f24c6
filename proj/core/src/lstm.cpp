#include "moedge/lstm.hpp"

namespace moedge {
namespace {

struct Views {
  Eigen::Map<const Eigen::MatrixXd> wx, wh;  // 4h x in, 4h x h
  Eigen::Map<const Eigen::VectorXd> b;       // 4h
  Eigen::Map<const Eigen::MatrixXd> v;       // out x h
  Eigen::Map<const Eigen::VectorXd> c;       // out
};

Views views(const Eigen::VectorXd& theta, const LstmArch& a) {
  const int h = a.hidden_size, in = a.input_size, out = a.output_size;
  const double* p = theta.data();
  return {{p, 4 * h, in},
          {p + 4 * h * in, 4 * h, h},
          {p + 4 * h * (in + h), 4 * h},
          {p + 4 * h * (in + h) + 4 * h, out, h},
          {p + 4 * h * (in + h) + 4 * h + out * h, out}};
}

struct MutViews {
  Eigen::Map<Eigen::MatrixXd> wx, wh;
  Eigen::Map<Eigen::VectorXd> b;
  Eigen::Map<Eigen::MatrixXd> v;
  Eigen::Map<Eigen::VectorXd> c;
};

MutViews mut_views(Eigen::VectorXd& theta, const LstmArch& a) {
  const int h = a.hidden_size, in = a.input_size, out = a.output_size;
  double* p = theta.data();
  return {{p, 4 * h, in},
          {p + 4 * h * in, 4 * h, h},
          {p + 4 * h * (in + h), 4 * h},
          {p + 4 * h * (in + h) + 4 * h, out, h},
          {p + 4 * h * (in + h) + 4 * h + out * h, out}};
}

}  // namespace

LstmKernel::LstmKernel(LstmArch arch) : arch_(arch) { arch_.validate(); }

Eigen::MatrixXd LstmKernel::forward(const Eigen::VectorXd& theta,
                                    const Eigen::MatrixXd& sequence,
                                    LstmTape* tape) const {
  const int h = arch_.hidden_size, in = arch_.input_size;
  if (theta.size() != arch_.param_count())
    throw ValidationError("LSTM parameter vector size mismatch");
  if (sequence.cols() == 0 || sequence.cols() % in != 0)
    throw ValidationError("sequence width must be a positive multiple of input_size");
  const int steps = static_cast<int>(sequence.cols()) / in;
  const auto batch = sequence.rows();
  const auto vw = views(theta, arch_);

  Eigen::MatrixXd hidden = Eigen::MatrixXd::Zero(batch, h);
  Eigen::MatrixXd cell = Eigen::MatrixXd::Zero(batch, h);
  if (tape) {
    tape->gates.clear();
    tape->cell.clear();
    tape->cell_tanh.clear();
    tape->hidden.assign(1, hidden);
  }
  for (int t = 0; t < steps; ++t) {
    const auto x_t = sequence.middleCols(t * in, in);
    Eigen::MatrixXd z =
        ((x_t * vw.wx.transpose() + hidden * vw.wh.transpose()).rowwise() +
         vw.b.transpose());
    // Gate order i, f, g, o: logistic for i/f/o, tanh for the candidate g.
    z.leftCols(2 * h) =
        (1.0 + (-z.leftCols(2 * h).array()).exp()).inverse();
    z.middleCols(2 * h, h) = z.middleCols(2 * h, h).array().tanh();
    z.rightCols(h) = (1.0 + (-z.rightCols(h).array()).exp()).inverse();

    cell = z.middleCols(h, h).cwiseProduct(cell) +
           z.leftCols(h).cwiseProduct(z.middleCols(2 * h, h));
    const Eigen::MatrixXd cell_t = cell.array().tanh();
    hidden = z.rightCols(h).cwiseProduct(cell_t);
    if (tape) {
      tape->gates.push_back(std::move(z));
      tape->cell.push_back(cell);
      tape->cell_tanh.push_back(cell_t);
      tape->hidden.push_back(hidden);
    }
  }
  return (hidden * vw.v.transpose()).rowwise() + vw.c.transpose();
}

void LstmKernel::backward(const Eigen::VectorXd& theta,
                          const Eigen::MatrixXd& sequence, const LstmTape& tape,
                          const Eigen::MatrixXd& grad_output,
                          Eigen::VectorXd& grad) const {
  const int h = arch_.hidden_size, in = arch_.input_size;
  const int steps = static_cast<int>(tape.gates.size());
  if (grad.size() != theta.size())
    throw ValidationError("gradient buffer size mismatch");
  const auto vw = views(theta, arch_);
  auto gv = mut_views(grad, arch_);

  gv.v.noalias() += grad_output.transpose() * tape.hidden[steps];
  gv.c += grad_output.colwise().sum().transpose();

  Eigen::MatrixXd d_hidden = grad_output * vw.v;
  Eigen::MatrixXd d_cell = Eigen::MatrixXd::Zero(d_hidden.rows(), h);
  for (int t = steps - 1; t >= 0; --t) {
    const auto& z = tape.gates[t];
    const auto gate_i = z.leftCols(h);
    const auto gate_f = z.middleCols(h, h);
    const auto gate_g = z.middleCols(2 * h, h);
    const auto gate_o = z.rightCols(h);
    const auto& cell_t = tape.cell_tanh[t];

    const Eigen::MatrixXd d_o = d_hidden.cwiseProduct(cell_t);
    d_cell += d_hidden.cwiseProduct(gate_o).cwiseProduct(
        (1.0 - cell_t.array().square()).matrix());

    const Eigen::MatrixXd prev_cell =
        t > 0 ? tape.cell[t - 1]
              : Eigen::MatrixXd::Zero(d_hidden.rows(), h).eval();
    Eigen::MatrixXd d_z(d_hidden.rows(), 4 * h);
    d_z.leftCols(h) = d_cell.cwiseProduct(gate_g).array() * gate_i.array() *
                      (1.0 - gate_i.array());
    d_z.middleCols(h, h) = d_cell.cwiseProduct(prev_cell).array() *
                           gate_f.array() * (1.0 - gate_f.array());
    d_z.middleCols(2 * h, h) = d_cell.cwiseProduct(gate_i).array() *
                               (1.0 - gate_g.array().square());
    d_z.rightCols(h) = d_o.array() * gate_o.array() * (1.0 - gate_o.array());

    const auto x_t = sequence.middleCols(t * in, in);
    gv.wx.noalias() += d_z.transpose() * x_t;
    gv.wh.noalias() += d_z.transpose() * tape.hidden[t];
    gv.b += d_z.colwise().sum().transpose();

    d_hidden = d_z * vw.wh;
    d_cell = d_cell.cwiseProduct(gate_f);
  }
}

}  // namespace moedge
