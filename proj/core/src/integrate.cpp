#include "dynagg/integrate.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <json.hpp>

#include "dynagg/errors.hpp"
#include "dynagg/rng.hpp"

namespace dynagg {

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

template <typename Params, typename Fn>
void for_each_tensor(Params& p, Fn&& fn) {
  fn("w_z", p.w_z);
  fn("u_z", p.u_z);
  fn("b_z", p.b_z);
  fn("w_r", p.w_r);
  fn("u_r", p.u_r);
  fn("b_r", p.b_r);
  fn("w_h", p.w_h);
  fn("u_h", p.u_h);
  fn("b_h", p.b_h);
  fn("w_o", p.w_o);
  fn("b_o", p.b_o);
}

}  // namespace

void GruParams::validate() const {
  const Eigen::Index h = hidden_dim();
  const Eigen::Index c_in = input_dim();
  const Eigen::Index c_out = output_dim();
  if (h < 1 || c_in < 1 || c_out < 1)
    throw ShapeError("gru parameters have empty dimensions");
  auto check = [&](const Eigen::MatrixXd& m, Eigen::Index rows,
                   Eigen::Index cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols)
      throw ShapeError(std::string("gru parameter ") + name +
                       " has inconsistent shape");
    if (!m.allFinite())
      throw ShapeError(std::string("gru parameter ") + name +
                       " has non-finite values");
  };
  check(w_z, h, c_in, "w_z");
  check(w_r, h, c_in, "w_r");
  check(w_h, h, c_in, "w_h");
  check(u_z, h, h, "u_z");
  check(u_r, h, h, "u_r");
  check(u_h, h, h, "u_h");
  check(b_z, h, 1, "b_z");
  check(b_r, h, 1, "b_r");
  check(b_h, h, 1, "b_h");
  check(w_o, c_out, h, "w_o");
  check(b_o, c_out, 1, "b_o");
}

GruParams GruParams::zeros(Eigen::Index input_dim, Eigen::Index hidden_dim,
                           Eigen::Index output_dim) {
  GruParams p;
  p.w_z = Eigen::MatrixXd::Zero(hidden_dim, input_dim);
  p.w_r = Eigen::MatrixXd::Zero(hidden_dim, input_dim);
  p.w_h = Eigen::MatrixXd::Zero(hidden_dim, input_dim);
  p.u_z = Eigen::MatrixXd::Zero(hidden_dim, hidden_dim);
  p.u_r = Eigen::MatrixXd::Zero(hidden_dim, hidden_dim);
  p.u_h = Eigen::MatrixXd::Zero(hidden_dim, hidden_dim);
  p.b_z = Eigen::VectorXd::Zero(hidden_dim);
  p.b_r = Eigen::VectorXd::Zero(hidden_dim);
  p.b_h = Eigen::VectorXd::Zero(hidden_dim);
  p.w_o = Eigen::MatrixXd::Zero(output_dim, hidden_dim);
  p.b_o = Eigen::VectorXd::Zero(output_dim);
  return p;
}

GruParams GruParams::seeded(Eigen::Index input_dim, Eigen::Index hidden_dim,
                            Eigen::Index output_dim, std::uint64_t seed) {
  GruParams p = zeros(input_dim, hidden_dim, output_dim);
  Rng rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  for_each_tensor(p, [&](const char*, Eigen::Ref<Eigen::MatrixXd> t) {
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = rng.uniform(-s, s);
  });
  return p;
}

void PaddedSequence::validate() const {
  if (valid_len < 1) throw ShapeError("padded sequence has no valid rows");
  if (valid_len > length())
    throw ShapeError("padded sequence valid_len exceeds buffer length");
  for (Eigen::Index t = valid_len; t < length(); ++t)
    if (!values.row(t).isZero(0.0))
      throw ShapeError("padded sequence has non-zero pad row " +
                       std::to_string(t));
}

PaddedSequence pad_sequence(const Eigen::MatrixXd& features, Eigen::Index l) {
  if (features.rows() > l)
    throw ShapeError("sequence of length " + std::to_string(features.rows()) +
                     " does not fit padded buffer of " + std::to_string(l));
  PaddedSequence seq;
  seq.values = Eigen::MatrixXd::Zero(l, features.cols());
  seq.values.topRows(features.rows()) = features;
  seq.valid_len = features.rows();
  return seq;
}

Eigen::MatrixXd gru_forward(const PaddedSequence& seq, const GruParams& params,
                            GruContext* ctx) {
  params.validate();
  seq.validate();
  if (seq.values.cols() != params.input_dim())
    throw ShapeError("sequence channels do not match gru input dimension");

  const Eigen::Index h_dim = params.hidden_dim();
  const Eigen::Index t_valid = seq.valid_len;
  if (ctx) {
    ctx->z.resize(t_valid, h_dim);
    ctx->r.resize(t_valid, h_dim);
    ctx->c.resize(t_valid, h_dim);
    ctx->h.resize(t_valid, h_dim);
  }

  Eigen::MatrixXd outputs(t_valid, params.output_dim());
  Eigen::VectorXd h = Eigen::VectorXd::Zero(h_dim);
  for (Eigen::Index t = 0; t < seq.length(); ++t) {
    const Eigen::VectorXd x = seq.values.row(t).transpose();
    const Eigen::VectorXd z = sigmoid(params.w_z * x + params.u_z * h + params.b_z);
    const Eigen::VectorXd r = sigmoid(params.w_r * x + params.u_r * h + params.b_r);
    const Eigen::VectorXd c =
        (params.w_h * x + params.u_h * (r.cwiseProduct(h)) + params.b_h)
            .array()
            .tanh();
    h = (1.0 - z.array()).matrix().cwiseProduct(h) + z.cwiseProduct(c);
    if (t < t_valid) {
      outputs.row(t) = (params.w_o * h + params.b_o).transpose();
      if (ctx) {
        ctx->z.row(t) = z.transpose();
        ctx->r.row(t) = r.transpose();
        ctx->c.row(t) = c.transpose();
        ctx->h.row(t) = h.transpose();
      }
    }
  }
  return outputs;
}

GruGradients gru_backward(const Eigen::MatrixXd& grad_out,
                          const PaddedSequence& seq, const GruParams& params,
                          const GruContext& ctx) {
  params.validate();
  seq.validate();
  const Eigen::Index t_valid = seq.valid_len;
  if (grad_out.rows() != t_valid || grad_out.cols() != params.output_dim())
    throw ShapeError("gru_backward: grad_out shape mismatch");
  if (ctx.h.rows() != t_valid || ctx.h.cols() != params.hidden_dim())
    throw ShapeError("gru_backward: forward context shape mismatch");

  GruGradients g;
  g.seq = Eigen::MatrixXd::Zero(seq.length(), params.input_dim());
  g.params = GruParams::zeros(params.input_dim(), params.hidden_dim(),
                              params.output_dim());

  Eigen::VectorXd dh = Eigen::VectorXd::Zero(params.hidden_dim());
  for (Eigen::Index t = t_valid - 1; t >= 0; --t) {
    const Eigen::VectorXd x = seq.values.row(t).transpose();
    const Eigen::VectorXd z = ctx.z.row(t).transpose();
    const Eigen::VectorXd r = ctx.r.row(t).transpose();
    const Eigen::VectorXd c = ctx.c.row(t).transpose();
    const Eigen::VectorXd h = ctx.h.row(t).transpose();
    const Eigen::VectorXd h_prev =
        t > 0 ? Eigen::VectorXd(ctx.h.row(t - 1).transpose())
              : Eigen::VectorXd(Eigen::VectorXd::Zero(params.hidden_dim()));

    const Eigen::VectorXd dy = grad_out.row(t).transpose();
    g.params.w_o += dy * h.transpose();
    g.params.b_o += dy;
    dh += params.w_o.transpose() * dy;

    const Eigen::VectorXd dz = dh.cwiseProduct(c - h_prev);
    const Eigen::VectorXd dc = dh.cwiseProduct(z);
    Eigen::VectorXd dh_prev = dh.cwiseProduct((1.0 - z.array()).matrix());

    const Eigen::VectorXd da_h =
        dc.cwiseProduct((1.0 - c.array().square()).matrix());
    g.params.w_h += da_h * x.transpose();
    g.params.u_h += da_h * (r.cwiseProduct(h_prev)).transpose();
    g.params.b_h += da_h;
    const Eigen::VectorXd d_rh = params.u_h.transpose() * da_h;
    const Eigen::VectorXd dr = d_rh.cwiseProduct(h_prev);
    dh_prev += d_rh.cwiseProduct(r);

    const Eigen::VectorXd da_r =
        dr.cwiseProduct(r.cwiseProduct((1.0 - r.array()).matrix()));
    g.params.w_r += da_r * x.transpose();
    g.params.u_r += da_r * h_prev.transpose();
    g.params.b_r += da_r;
    dh_prev += params.u_r.transpose() * da_r;

    const Eigen::VectorXd da_z =
        dz.cwiseProduct(z.cwiseProduct((1.0 - z.array()).matrix()));
    g.params.w_z += da_z * x.transpose();
    g.params.u_z += da_z * h_prev.transpose();
    g.params.b_z += da_z;
    dh_prev += params.u_z.transpose() * da_z;

    g.seq.row(t) = (params.w_z.transpose() * da_z +
                    params.w_r.transpose() * da_r +
                    params.w_h.transpose() * da_h)
                       .transpose();
    dh = dh_prev;
  }
  return g;
}

void save_gru_checkpoint(const std::filesystem::path& path,
                         const GruParams& params) {
  params.validate();
  nlohmann::json manifest;
  manifest["tensors"] = nlohmann::json::array();
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw ParseError("cannot write " + path.string());
  for_each_tensor(params,
                  [&](const char* name, const Eigen::Ref<const Eigen::MatrixXd>& t) {
    manifest["tensors"].push_back(
        {{"name", name}, {"shape", {t.rows(), t.cols()}}});
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = 0; j < t.cols(); ++j) {
        const double v = t(i, j);
        bin.write(reinterpret_cast<const char*>(&v), sizeof v);
      }
  });
  std::ofstream meta(path.string() + ".json");
  if (!meta) throw ParseError("cannot write " + path.string() + ".json");
  meta << manifest.dump(2) << "\n";
}

GruParams load_gru_checkpoint(const std::filesystem::path& path) {
  std::ifstream meta(path.string() + ".json");
  if (!meta) throw ParseError("cannot open " + path.string() + ".json");
  nlohmann::json manifest;
  try {
    meta >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ".json: " + e.what());
  }

  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw ParseError("cannot open " + path.string());

  GruParams p;
  std::map<std::string, Eigen::MatrixXd> tensors;
  try {
    for (const auto& entry : manifest.at("tensors")) {
      const auto name = entry.at("name").get<std::string>();
      const Eigen::Index rows = entry.at("shape").at(0).get<Eigen::Index>();
      const Eigen::Index cols = entry.at("shape").at(1).get<Eigen::Index>();
      Eigen::MatrixXd t(rows, cols);
      for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
          double v = 0.0;
          if (!bin.read(reinterpret_cast<char*>(&v), sizeof v))
            throw ParseError(path.string() + ": truncated tensor " + name);
          t(i, j) = v;
        }
      tensors[name] = std::move(t);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ".json: " + e.what());
  }

  auto take = [&](const char* name) -> const Eigen::MatrixXd& {
    auto it = tensors.find(name);
    if (it == tensors.end())
      throw ParseError(path.string() + ".json: missing tensor " +
                       std::string(name));
    return it->second;
  };
  auto take_vec = [&](const char* name) -> Eigen::VectorXd {
    const Eigen::MatrixXd& t = take(name);
    if (t.cols() != 1)
      throw ParseError(path.string() + ".json: tensor " + std::string(name) +
                       " is not a column vector");
    return t.col(0);
  };
  p.w_z = take("w_z");
  p.u_z = take("u_z");
  p.b_z = take_vec("b_z");
  p.w_r = take("w_r");
  p.u_r = take("u_r");
  p.b_r = take_vec("b_r");
  p.w_h = take("w_h");
  p.u_h = take("u_h");
  p.b_h = take_vec("b_h");
  p.w_o = take("w_o");
  p.b_o = take_vec("b_o");
  p.validate();
  return p;
}

}  // namespace dynagg
