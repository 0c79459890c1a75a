#include "mra/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "mra/errors.hpp"

namespace mra {

void ExperimentConfig::validate() const {
  if (p <= 0 || p % 2 != 0) throw InvalidInput("config: p must be even and positive, got " + std::to_string(p));
  if (K < 1) throw InvalidInput("config: K must be at least 1");
  if (L < 1) throw InvalidInput("config: L must be at least 1");
  if (!(sigma >= 0.0)) throw InvalidInput("config: sigma must be >= 0");
  if (!(epsilon > 0.0)) throw InvalidInput("config: epsilon must be > 0");
  if (threads < 1) throw InvalidInput("config: threads must be at least 1");
  if (!exact_moments && n == 0) throw InvalidInput("config: n must be positive unless exact_moments is set");
}

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw InvalidInput("config: bad value '" + value + "' for " + key);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw InvalidInput("config: bad boolean '" + value + "' for " + key);
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, ExperimentConfig c) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::set<std::string> seen;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidInput("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw InvalidInput("config: key '" + key + "' given twice");
    if (key == "p") c.p = parse_number<int>(key, value);
    else if (key == "K") c.K = parse_number<int>(key, value);
    else if (key == "sigma") c.sigma = parse_number<double>(key, value);
    else if (key == "n") c.n = parse_number<std::uint64_t>(key, value);
    else if (key == "exact_moments") c.exact_moments = parse_bool(key, value);
    else if (key == "L") c.L = parse_number<int>(key, value);
    else if (key == "epsilon") c.epsilon = parse_number<double>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "mem_cap") c.mem_cap = parse_number<std::uint64_t>(key, value);
    else if (key == "threads") c.threads = parse_number<int>(key, value);
    else throw InvalidInput("config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "p = " << c.p << "\nK = " << c.K << "\nsigma = " << c.sigma << "\nn = " << c.n
      << "\nexact_moments = " << (c.exact_moments ? "true" : "false") << "\nL = " << c.L
      << "\nepsilon = " << c.epsilon << "\nseed = " << c.seed << "\nmem_cap = " << c.mem_cap
      << "\nthreads = " << c.threads << "\n";
  return out.str();
}

}  // namespace mra
