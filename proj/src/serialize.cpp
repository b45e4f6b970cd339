#include "ntkop/serialize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ntkop {

std::string format_double(double x)
{
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string fnv1a_hex(const std::string& text)
{
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v)
{
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd to_eigen(const std::vector<double>& v)
{
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

nlohmann::json dataset_to_json(const Dataset& data)
{
  nlohmann::json j;
  j["split"] = to_string(data.split);
  j["seed"] = data.seed;
  j["max_degree"] = data.max_degree;
  j["grid"] = {{"scheme", to_string(data.grid->scheme())},
               {"n_x", data.grid->size()},
               {"points", to_vector(data.grid->points())},
               {"weights", to_vector(data.grid->weights())}};
  auto& samples = j["samples"] = nlohmann::json::array();
  for (std::size_t i = 0; i < data.size(); ++i)
    samples.push_back({{"coeffs", data.input_polys[i].coeffs()},
                       {"u_values", to_vector(data.inputs[i].scalar())},
                       {"v_values", to_vector(data.targets[i].scalar())}});
  return j;
}

Dataset dataset_from_json(const nlohmann::json& j)
{
  const auto& g = j.at("grid");
  const auto points = to_eigen(g.at("points").get<std::vector<double>>());
  if (g.at("n_x").get<Eigen::Index>() != points.size())
    throw std::invalid_argument("dataset json: n_x does not match the point list");
  Eigen::VectorXd weights;
  if (g.contains("weights"))
    weights = to_eigen(g.at("weights").get<std::vector<double>>());
  else
    weights = Eigen::VectorXd::Constant(points.size(), 1.0 / static_cast<double>(points.size()));
  auto grid = std::make_shared<const Grid>(points, weights,
                                           grid_scheme_from_string(g.at("scheme").get<std::string>()));

  Dataset d;
  d.split = split_from_string(j.at("split").get<std::string>());
  d.seed = j.at("seed").get<std::uint64_t>();
  d.max_degree = j.at("max_degree").get<int>();
  d.grid = grid;
  for (const auto& s : j.at("samples")) {
    d.input_polys.emplace_back(s.at("coeffs").get<std::vector<double>>());
    const auto u = to_eigen(s.at("u_values").get<std::vector<double>>());
    const auto v = to_eigen(s.at("v_values").get<std::vector<double>>());
    d.inputs.emplace_back(grid, u);
    d.targets.emplace_back(grid, v);
  }
  if (d.input_polys.empty()) throw std::invalid_argument("dataset json: no samples");
  return d;
}

void write_text_file(const std::string& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_dataset(const Dataset& data, const std::string& path)
{
  write_text_file(path, dataset_to_json(data).dump() + "\n");
}

Dataset load_dataset(const std::string& path)
{
  return dataset_from_json(nlohmann::json::parse(read_text_file(path)));
}

nlohmann::json params_to_json(const Params& theta, double tau)
{
  nlohmann::json B = nlohmann::json::array();
  for (Eigen::Index m = 0; m < theta.B.rows(); ++m)
    B.push_back(to_vector(theta.B.row(m).transpose()));
  return {{"M", theta.width()},
          {"d_tilde", theta.d_tilde()},
          {"tau", tau},
          {"a", to_vector(theta.a)},
          {"B", B}};
}

Params params_from_json(const nlohmann::json& j)
{
  const int M = j.at("M").get<int>();
  const int d = j.at("d_tilde").get<int>();
  const auto a = j.at("a").get<std::vector<double>>();
  const auto rows = j.at("B").get<std::vector<std::vector<double>>>();
  if (static_cast<int>(a.size()) != M || static_cast<int>(rows.size()) != M)
    throw std::invalid_argument("params json: width mismatch");
  Params p;
  p.a = to_eigen(a);
  p.B.resize(M, d);
  for (int m = 0; m < M; ++m) {
    if (static_cast<int>(rows[m].size()) != d)
      throw std::invalid_argument("params json: row length differs from d_tilde");
    for (int k = 0; k < d; ++k) p.B(m, k) = rows[m][k];
  }
  if (!p.is_finite()) throw std::invalid_argument("params json: non-finite entries");
  return p;
}

void save_params(const Params& theta, double tau, const std::string& path)
{
  write_text_file(path, params_to_json(theta, tau).dump() + "\n");
}

Params load_params(const std::string& path)
{
  return params_from_json(nlohmann::json::parse(read_text_file(path)));
}

} // namespace ntkop
