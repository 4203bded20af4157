#include "gsflow/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include "gsflow/error.hpp"

namespace gsflow {
namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"task", {"name"}},
      {"nonlinearity", {"a0", "terms", "holder_beta"}},
      {"problem", {"dimension", "geometry"}},
      {"grid", {"R", "h"}},
      {"shoot", {"r_max", "h", "tol"}},
      {"flow", {"dt", "T", "scheme", "sample_stride", "blowup_cap", "vanish_sup", "vanish_energy",
                "conv_tol", "fit_times", "rate_window"}},
      {"initial", {"kind", "scale", "width", "centers", "weights"}},
      {"fit", {"M", "max_iter", "opt_tol"}},
      {"spectrum", {"k", "max_ell", "trials"}},
      {"threshold", {"lo", "hi", "tol", "relative", "T"}},
      {"separate", {"instances", "max_points", "max_dim", "directions", "neighborhood"}},
      {"verify", {"criteria", "flow_h"}},
      {"run", {"seed", "threads"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void check_key(const std::string& key) {
  const auto dot = key.find('.');
  if (dot == std::string::npos) throw ConfigError("config key '" + key + "' has no section");
  const auto sec = schema().find(key.substr(0, dot));
  if (sec == schema().end()) throw ConfigError("unknown config section [" + key.substr(0, dot) + "]");
  if (!sec->second.count(key.substr(dot + 1))) throw ConfigError("unknown config key '" + key + "'");
}

double to_double(const std::string& key, const std::string& raw) {
  const std::string t = trim(raw);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("config key '" + key + "': '" + raw + "' is not a number");
  }
  return v;
}

}  // namespace

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

Config Config::parse(const std::string& text, const std::string& origin) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  Config c;
  c.origin_ = origin;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(origin + ": key '" + section + "' is outside any section");
    }
    for (const auto& [key, node] : body) c.set(section + "." + key, node.data());
  }
  return c;
}

void Config::set(const std::string& key, const std::string& value) {
  check_key(key);
  values_[key] = trim(value);
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  check_key(key);
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get(const std::string& key, double fallback) const {
  check_key(key);
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : to_double(key, it->second);
}

int Config::get(const std::string& key, int fallback) const {
  const double v = get(key, static_cast<double>(fallback));
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw ConfigError("config key '" + key + "' must be an integer");
  }
  return static_cast<int>(v);
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  check_key(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::uint64_t v = 0;
  const std::string& t = it->second;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError("config key '" + key + "' must be an unsigned integer");
  }
  return v;
}

bool Config::get(const std::string& key, bool fallback) const {
  const std::string v = get(key, std::string(fallback ? "true" : "false"));
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "' must be true or false");
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::string Config::hash() const {
  const std::string text = canonical();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double("list", item));
  }
  return out;
}

std::vector<std::vector<double>> parse_points(const std::string& text) {
  std::vector<std::vector<double>> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ';')) {
    std::istringstream coords(item);
    std::vector<double> p;
    std::string c;
    while (coords >> c) p.push_back(to_double("point", c));
    if (!p.empty()) out.push_back(std::move(p));
  }
  return out;
}

std::vector<int> parse_criteria(const std::string& text) {
  if (trim(text) == "all") {
    std::vector<int> all(11);
    for (int i = 0; i < 11; ++i) all[i] = i + 1;
    return all;
  }
  std::vector<int> out;
  for (double v : parse_list(text)) {
    if (v != std::floor(v) || v < 1 || v > 11) {
      throw ConfigError("criterion ids are integers in 1..11");
    }
    if (std::find(out.begin(), out.end(), int(v)) == out.end()) out.push_back(int(v));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Nonlinearity nonlinearity_from(const Config& c) {
  const double a0 = c.get("nonlinearity.a0", 1.0);
  std::vector<PowerTerm> terms;
  std::string item;
  std::istringstream in(c.get("nonlinearity.terms", std::string("1:2")));
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("nonlinearity.terms entries are coeff:exponent, got '" + item + "'");
    }
    terms.push_back({to_double("nonlinearity.terms", item.substr(0, colon)),
                     to_double("nonlinearity.terms", item.substr(colon + 1))});
  }
  std::optional<double> beta;
  if (c.has("nonlinearity.holder_beta")) beta = c.get("nonlinearity.holder_beta", 1.0);
  try {
    return Nonlinearity(a0, std::move(terms), beta);
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("invalid nonlinearity: ") + e.what());
  }
}

FlowOptions flow_options_from(const Config& c) {
  FlowOptions f;
  f.dt = c.get("flow.dt", f.dt);
  f.T = c.get("flow.T", f.T);
  try {
    f.scheme = scheme_from_string(c.get("flow.scheme", to_string(f.scheme)));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  f.sample_stride = c.get("flow.sample_stride", f.sample_stride);
  f.blowup_cap = c.get("flow.blowup_cap", f.blowup_cap);
  f.vanish_sup = c.get("flow.vanish_sup", f.vanish_sup);
  f.vanish_energy = c.get("flow.vanish_energy", f.vanish_energy);
  f.conv_tol = c.get("flow.conv_tol", f.conv_tol);
  if (!(f.dt > 0.0) || !(f.T > 0.0) || f.sample_stride < 1 || !(f.blowup_cap > 0.0) ||
      !(f.vanish_sup > 0.0) || !(f.vanish_energy > 0.0) || f.conv_tol < 0.0) {
    throw ConfigError("flow tolerances and step sizes must be positive");
  }
  return f;
}

}  // namespace gsflow
