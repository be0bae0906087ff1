#include "ebpois/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "ebpois/error.hpp"

namespace ebpois {

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::int64_t to_count(const Json& v, const std::string& what) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == std::floor(d) && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
  }
  throw InvalidInput(what + ": expected an integer");
}

}  // namespace

Json to_json(const DiscretePrior& prior) {
  Json j;
  j["atoms"] = prior.atoms();
  j["weights"] = prior.weights();
  return j;
}

DiscretePrior prior_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("atoms") || !j.contains("weights"))
    throw InvalidInput("prior JSON must be an object with atoms and weights");
  const Json& a = j.at("atoms");
  const Json& w = j.at("weights");
  if (!a.is_array() || !w.is_array()) throw InvalidInput("prior atoms/weights must be arrays");
  std::vector<double> atoms, weights;
  for (const auto& v : a) {
    if (!v.is_number()) throw InvalidInput("prior atoms must be numbers");
    atoms.push_back(v.get<double>());
  }
  for (const auto& v : w) {
    if (!v.is_number()) throw InvalidInput("prior weights must be numbers");
    weights.push_back(v.get<double>());
  }
  return DiscretePrior(std::move(atoms), std::move(weights));
}

Json to_json(const NpmleFit& fit) {
  Json j;
  j["prior"] = to_json(fit.prior);
  j["log_likelihood"] = fit.log_likelihood;
  j["kkt_gap"] = fit.kkt_gap;
  j["support_gap"] = fit.support_gap;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  return j;
}

Json to_json(const MatchReport& r) {
  Json j;
  j["M"] = r.M;
  j["eta"] = r.eta;
  j["C"] = r.partition.C;
  j["atom_count"] = r.atom_count;
  j["budget"] = r.budget;
  j["achieved_sup_error"] = r.achieved_sup_error;
  j["approximant"] = to_json(r.approximant);
  Json iv = Json::array();
  for (const auto& m : r.intervals) {
    iv.push_back({{"lo", m.lo},
                  {"hi", m.hi},
                  {"mass", m.mass},
                  {"degree", m.degree},
                  {"source_atoms", m.source_atoms},
                  {"atoms", m.atoms},
                  {"moment_error", m.moment_error},
                  {"copied", m.copied},
                  {"reduced", m.reduced}});
  }
  j["intervals"] = std::move(iv);
  j["warnings"] = r.warnings;
  return j;
}

CountHistogram parse_histogram(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  if (i < text.size() && text[i] == '{') {
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw InvalidInput(std::string("histogram JSON: ") + e.what());
    }
    if (!j.contains("counts") || !j.at("counts").is_object())
      throw InvalidInput("histogram JSON needs a \"counts\" object");
    std::map<std::int64_t, std::int64_t> counts;
    for (const auto& [key, v] : j.at("counts").items()) {
      std::int64_t y = 0;
      try {
        std::size_t pos = 0;
        y = std::stoll(key, &pos);
        if (pos != key.size()) throw std::invalid_argument(key);
      } catch (const std::exception&) {
        throw InvalidInput("histogram key '" + key + "' is not an integer");
      }
      counts[y] += to_count(v, "histogram count");
    }
    return CountHistogram::from_counts(counts);
  }
  std::vector<std::int64_t> ys;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    const std::string tok = line.substr(b, e - b + 1);
    std::int64_t y = 0;
    try {
      std::size_t pos = 0;
      y = std::stoll(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InvalidInput("line " + std::to_string(lineno) + ": '" + tok + "' is not an integer");
    }
    if (y < 0) throw InvalidInput("line " + std::to_string(lineno) + ": negative count");
    ys.push_back(y);
  }
  if (ys.empty()) throw InvalidInput("no observations");
  return CountHistogram::from_observations(ys);
}

void write_rule_csv(std::ostream& os, const FittedRule& rule,
                    const std::vector<std::pair<std::string, std::string>>& header) {
  for (const auto& [k, v] : header) os << "# " << k << '=' << v << '\n';
  os << "y,estimate,flags\n";
  std::size_t inf = 0, deg = 0;
  for (std::int64_t y = 0; y <= rule.y_cap(); ++y) {
    std::string flags;
    while (inf < rule.infinite_at.size() && rule.infinite_at[inf] < y) ++inf;
    while (deg < rule.degenerate_at.size() && rule.degenerate_at[deg] < y) ++deg;
    if (inf < rule.infinite_at.size() && rule.infinite_at[inf] == y) flags = "infinite";
    if (deg < rule.degenerate_at.size() && rule.degenerate_at[deg] == y) flags = "degenerate";
    os << y << ',' << fmt(rule.table[static_cast<std::size_t>(y)]) << ',' << flags << '\n';
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw InvalidInput("write to '" + path + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace ebpois
