#include "detcert/serialize.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace detcert {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json comparison_to_json(const ComparisonFunction& f) {
  json j;
  switch (f.kind()) {
    case ComparisonFunction::Kind::PowerLaw:
      j["variant"] = "power";
      j["a"] = f.param_a();
      j["b"] = f.param_b();
      break;
    case ComparisonFunction::Kind::LogAffine:
      j["variant"] = "log_affine";
      j["a"] = f.param_a();
      break;
    case ComparisonFunction::Kind::Sum: {
      j["variant"] = "sum";
      j["weights"] = f.weights();
      json terms = json::array();
      for (const auto& t : f.terms()) terms.push_back(comparison_to_json(t));
      j["terms"] = std::move(terms);
      break;
    }
    case ComparisonFunction::Kind::Tabulated:
      j["variant"] = "tabulated";
      j["s"] = f.table_s();
      j["v"] = f.table_v();
      j["tail_exponent"] = f.tail_exponent();
      break;
  }
  return j;
}

namespace {

ComparisonFunction comparison_from_shorthand(const std::string& s) {
  if (s == "identity" || s == "id") return ComparisonFunction::identity();
  auto split = [](const std::string& str) {
    std::vector<std::string> parts;
    std::stringstream ss(str);
    std::string cell;
    while (std::getline(ss, cell, ':')) parts.push_back(cell);
    return parts;
  };
  const auto parts = split(s);
  if (parts[0] == "power" && parts.size() == 3)
    return ComparisonFunction::power_law(std::stod(parts[1]), std::stod(parts[2]));
  if ((parts[0] == "log_affine" || parts[0] == "logaffine") && parts.size() <= 2)
    return ComparisonFunction::log_affine(parts.size() == 2 ? std::stod(parts[1]) : 1.0);
  throw std::invalid_argument("unknown comparison-function shorthand '" + s +
                              "' (try identity, power:a:b, log_affine:a)");
}

ComparisonFunction tabulated_from_csv(const std::string& path, double tail_exponent) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open knot table: " + path);
  std::vector<double> s, v;
  std::string line;
  bool first = true;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    if (first) {
      first = false;
      // optional header line
      if (line.find_first_not_of("0123456789+-.eE, \t") != std::string::npos) continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> cols;
    while (std::getline(ss, cell, ',')) cols.push_back(std::stod(cell));
    if (cols.size() != 2)
      throw std::runtime_error(path + ": row " + std::to_string(row) + ": expected two columns");
    s.push_back(cols[0]);
    v.push_back(cols[1]);
  }
  return ComparisonFunction::tabulated(std::move(s), std::move(v), tail_exponent);
}

}  // namespace

ComparisonFunction comparison_from_json(const json& j, const std::string& base_dir) {
  if (j.is_string()) return comparison_from_shorthand(j.get<std::string>());
  if (!j.is_object() || !j.contains("variant"))
    throw std::invalid_argument("comparison function: expected shorthand string or {\"variant\":...}");
  const std::string variant = j.at("variant").get<std::string>();
  if (variant == "power") return ComparisonFunction::power_law(j.at("a").get<double>(), j.at("b").get<double>());
  if (variant == "log_affine") return ComparisonFunction::log_affine(j.at("a").get<double>());
  if (variant == "sum") {
    std::vector<ComparisonFunction> terms;
    for (const auto& t : j.at("terms")) terms.push_back(comparison_from_json(t, base_dir));
    std::vector<double> weights = j.value("weights", std::vector<double>(terms.size(), 1.0));
    return ComparisonFunction::scaled_sum(std::move(terms), std::move(weights));
  }
  if (variant == "tabulated") {
    const double tail = j.value("tail_exponent", 1.0);
    if (j.contains("csv")) {
      const fs::path p = fs::path(base_dir) / j.at("csv").get<std::string>();
      return tabulated_from_csv(p.string(), tail);
    }
    return ComparisonFunction::tabulated(j.at("s").get<std::vector<double>>(),
                                         j.at("v").get<std::vector<double>>(), tail);
  }
  throw std::invalid_argument("comparison function: unknown variant '" + variant + "'");
}

json ioss_certificate_to_json(const IossCertificate& c) {
  return json{{"alpha", comparison_to_json(c.alpha)},
              {"alpha_x", comparison_to_json(c.alpha_x)},
              {"alpha_u", comparison_to_json(c.alpha_u)},
              {"alpha_y", comparison_to_json(c.alpha_y)},
              {"lambda", c.lambda}};
}

IossCertificate ioss_certificate_from_json(const json& j, const std::string& base_dir) {
  IossCertificate c{comparison_from_json(j.at("alpha"), base_dir),
                    comparison_from_json(j.at("alpha_x"), base_dir),
                    comparison_from_json(j.at("alpha_u"), base_dir),
                    comparison_from_json(j.at("alpha_y"), base_dir), j.at("lambda").get<double>()};
  c.validate();
  return c;
}

json lyap_certificate_to_json(const LyapCertificate& c) {
  json j{{"alpha1", comparison_to_json(c.alpha1)},
         {"alpha2", comparison_to_json(c.alpha2)},
         {"sigma_u", comparison_to_json(c.sigma_u)},
         {"sigma_y", comparison_to_json(c.sigma_y)},
         {"lambda", c.lambda}};
  if (c.U.is_quadratic()) j["U"] = json{{"type", "quadratic"}, {"P", c.U.P()}, {"n", c.U.n()}};
  return j;
}

LyapCertificate lyap_certificate_from_json(const json& j, const std::string& base_dir) {
  const auto& u = j.at("U");
  if (u.at("type").get<std::string>() != "quadratic")
    throw std::invalid_argument("lyap certificate: only quadratic U is file-loadable");
  LyapCertificate c = LyapCertificate::quadratic(
      u.at("P").get<std::vector<double>>(), u.at("n").get<std::size_t>(),
      comparison_from_json(j.at("sigma_u"), base_dir), comparison_from_json(j.at("sigma_y"), base_dir),
      j.at("lambda").get<double>());
  return c;
}

json rgas_certificate_to_json(const RgasCertificate& c) {
  return json{{"beta", comparison_to_json(c.beta)},
              {"beta_x", comparison_to_json(c.beta_x)},
              {"beta_u", comparison_to_json(c.beta_u)},
              {"beta_y", comparison_to_json(c.beta_y)},
              {"eta", c.eta}};
}

RgasCertificate rgas_certificate_from_json(const json& j, const std::string& base_dir) {
  RgasCertificate c{comparison_from_json(j.at("beta"), base_dir),
                    comparison_from_json(j.at("beta_x"), base_dir),
                    comparison_from_json(j.at("beta_u"), base_dir),
                    comparison_from_json(j.at("beta_y"), base_dir), j.at("eta").get<double>()};
  c.validate();
  return c;
}

void write_scenario(const std::string& dir, const std::string& tag, const TrajectoryPairScenario& sc) {
  fs::create_directories(dir);
  const std::string u1 = tag + "_u1.csv", u2 = tag + "_u2.csv", d = tag + "_d.csv";
  write_signal_csv((fs::path(dir) / u1).string(), sc.u1);
  write_signal_csv((fs::path(dir) / u2).string(), sc.u2);
  write_signal_csv((fs::path(dir) / d).string(), sc.d);
  json j{{"chi1", sc.chi1}, {"chi2", sc.chi2}, {"T", sc.T},
         {"dt", sc.dt},     {"u1_csv", u1},    {"u2_csv", u2},
         {"d_csv", d}};
  std::ofstream os(fs::path(dir) / (tag + ".json"));
  os << j.dump(2) << "\n";
}

TrajectoryPairScenario read_scenario(const std::string& json_path) {
  std::ifstream is(json_path);
  if (!is) throw std::runtime_error("cannot open scenario: " + json_path);
  json j = json::parse(is);
  const fs::path dir = fs::path(json_path).parent_path();
  TrajectoryPairScenario sc{j.at("chi1").get<std::vector<double>>(),
                            j.at("chi2").get<std::vector<double>>(),
                            read_signal_csv((dir / j.at("u1_csv").get<std::string>()).string()),
                            read_signal_csv((dir / j.at("u2_csv").get<std::string>()).string()),
                            read_signal_csv((dir / j.at("d_csv").get<std::string>()).string()),
                            j.at("T").get<double>(),
                            j.at("dt").get<double>()};
  return sc;
}

std::string json_hash(const json& j) {
  const std::string dump = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detcert
