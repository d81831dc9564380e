#include "mbde/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace mbde {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

void write_dataset_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  for (int a = 0; a < d.dim; ++a) out << (a == 0 ? "x" : ",x") << a;
  out << "\n";
  for (const auto& p : d.points) {
    for (std::size_t a = 0; a < p.size(); ++a) {
      if (a > 0) out << ',';
      out << format_double(p[a]);
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();

  Dataset d;
  d.dim = 1 + static_cast<int>(std::count(line.begin(), line.end(), ','));
  if (line.rfind("x0", 0) != 0)
    throw std::runtime_error("bad CSV header in " + path.string() + ": '" + line + "'");

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Point p;
    p.reserve(static_cast<std::size_t>(d.dim));
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t comma = line.find(',', start);
      const std::size_t stop = comma == std::string::npos ? line.size() : comma;
      p.push_back(parse_double(line.substr(start, stop - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (static_cast<int>(p.size()) != d.dim)
      throw std::runtime_error("row width mismatch in " + path.string());
    d.points.push_back(std::move(p));
  }
  return d;
}

json to_json(const TargetDensity& t) {
  json comps = json::array();
  for (const auto& c : t.components) {
    comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"variance", c.variance}});
  }
  return {{"dim", t.dim}, {"components", comps}};
}

TargetDensity target_from_json(const json& j) {
  TargetDensity t;
  t.dim = j.at("dim").get<int>();
  for (const auto& c : j.at("components")) {
    GaussianComponent g;
    g.weight = c.at("weight").get<double>();
    g.mean = c.at("mean").get<Point>();
    g.variance = c.at("variance").get<std::vector<double>>();
    t.components.push_back(std::move(g));
  }
  validate(t);
  return t;
}

json to_json(const Classifier& c) {
  json weights = json::array();
  json biases = json::array();
  for (std::size_t l = 0; l + 1 < c.widths.size(); ++l) {
    const std::size_t wn = static_cast<std::size_t>(c.widths[l]) *
                           static_cast<std::size_t>(c.widths[l + 1]);
    const std::size_t w_off = c.weight_offset(l);
    const std::size_t b_off = c.bias_offset(l);
    weights.push_back(std::vector<double>(c.params.begin() + static_cast<std::ptrdiff_t>(w_off),
                                          c.params.begin() + static_cast<std::ptrdiff_t>(w_off + wn)));
    biases.push_back(std::vector<double>(
        c.params.begin() + static_cast<std::ptrdiff_t>(b_off),
        c.params.begin() + static_cast<std::ptrdiff_t>(b_off + static_cast<std::size_t>(c.widths[l + 1]))));
  }
  return {{"widths", c.widths}, {"weights", weights}, {"biases", biases}, {"c_star", c.c_star}};
}

Classifier classifier_from_json(const json& j) {
  Classifier c;
  c.widths = j.at("widths").get<std::vector<int>>();
  if (c.widths.size() < 2) throw std::invalid_argument("classifier: bad widths");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < c.widths.size(); ++l)
    total += static_cast<std::size_t>(c.widths[l] + 1) * static_cast<std::size_t>(c.widths[l + 1]);
  c.params.assign(total, 0.0);
  const auto& weights = j.at("weights");
  const auto& biases = j.at("biases");
  for (std::size_t l = 0; l + 1 < c.widths.size(); ++l) {
    const auto w = weights.at(l).get<std::vector<double>>();
    const auto b = biases.at(l).get<std::vector<double>>();
    if (w.size() != static_cast<std::size_t>(c.widths[l]) * static_cast<std::size_t>(c.widths[l + 1]) ||
        b.size() != static_cast<std::size_t>(c.widths[l + 1]))
      throw std::invalid_argument("classifier: layer size mismatch");
    std::copy(w.begin(), w.end(), c.params.begin() + static_cast<std::ptrdiff_t>(c.weight_offset(l)));
    std::copy(b.begin(), b.end(), c.params.begin() + static_cast<std::ptrdiff_t>(c.bias_offset(l)));
  }
  c.c_star = j.at("c_star").get<double>();
  return c;
}

json to_json(const WlaReport& r) {
  return {{"gamma_p", r.gamma_p},
          {"gamma_q", r.gamma_q},
          {"c_star", r.c_star},
          {"regime", regime_name(r.regime)}};
}

WlaReport wla_from_json(const json& j) {
  WlaReport r;
  r.gamma_p = j.at("gamma_p").get<double>();
  r.gamma_q = j.at("gamma_q").get<double>();
  r.c_star = j.at("c_star").get<double>();
  r.regime = regime_from_name(j.at("regime").get<std::string>());
  return r;
}

json to_json(const MollifiedDensity& q) {
  json classifiers = json::array();
  for (const auto& c : q.classifiers) classifiers.push_back(to_json(c));
  json history = json::array();
  for (const auto& w : q.wla_history) history.push_back(to_json(w));
  return {{"eps", q.eps()},
          {"dim", q.dim()},
          {"T", q.rounds()},
          {"thetas", q.thetas.values},
          {"phi_hat", q.phi_hat},
          {"phi_stderr", q.phi_stderr},
          {"classifiers", classifiers},
          {"wla_history", history},
          {"seed", q.seed}};
}

MollifiedDensity model_from_json(const json& j) {
  MollifiedDensity q;
  q.base = BaseDensity{j.at("dim").get<int>()};
  q.thetas.eps = j.at("eps").get<double>();
  q.thetas.values = j.at("thetas").get<std::vector<double>>();
  q.phi_hat = j.at("phi_hat").get<double>();
  q.phi_stderr = j.at("phi_stderr").get<double>();
  q.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& c : j.at("classifiers")) q.classifiers.push_back(classifier_from_json(c));
  for (const auto& w : j.at("wla_history")) q.wla_history.push_back(wla_from_json(w));
  if (q.classifiers.size() != j.at("T").get<std::size_t>() ||
      q.thetas.values.size() != q.classifiers.size())
    throw std::invalid_argument("model: round count mismatch");
  return q;
}

json to_json(const PrivacyLedger& l) {
  return {{"eps_per_sample", l.eps_per_sample}, {"released", l.released}, {"spent", l.spent}};
}

PrivacyLedger ledger_from_json(const json& j) {
  PrivacyLedger l;
  l.eps_per_sample = j.at("eps_per_sample").get<double>();
  l.released = j.at("released").get<std::uint64_t>();
  l.spent = j.at("spent").get<double>();
  return l;
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  json j;
  in >> j;
  return j;
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mbde
