#include "mercbo/benchmarks.hpp"

#include "mercbo/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

namespace mercbo {

Objective::Objective(std::string name, std::size_t dimension, Function fn)
    : name_(std::move(name)),
      dimension_(dimension),
      fn_(std::move(fn)),
      counter_(std::make_unique<std::atomic<std::size_t>>(0)) {}

double Objective::evaluate(const BinaryPoint& x) const {
  if (x.size() != dimension_) {
    throw DimensionMismatch(name_ + ": point has dimension " + std::to_string(x.size()) + ", expected " +
                            std::to_string(dimension_));
  }
  counter_->fetch_add(1);
  return fn_(x);
}

// ---- LABS ----------------------------------------------------------------

std::int64_t labs_energy(const BinaryPoint& x) {
  const auto n = x.size();
  std::int64_t energy = 0;
  for (std::size_t k = 1; k < n; ++k) {
    std::int64_t c = 0;
    for (std::size_t i = 0; i + k < n; ++i) c += (x[i] == x[i + k]) ? 1 : -1;
    energy += c * c;
  }
  return energy;
}

double labs_merit_factor(const BinaryPoint& x) {
  if (x.size() < 2) throw InvalidConfiguration("LABS needs n >= 2");
  const auto energy = labs_energy(x);
  // The k = n-1 term alone is (s_1 s_n)^2 = 1.
  if (energy <= 0) throw Error("LABS energy must be positive");
  const double n = double(x.size());
  return n * n / double(energy);
}

double labs_objective(const BinaryPoint& x) { return -labs_merit_factor(x); }

Objective make_labs(std::size_t n) {
  if (n < 2) throw InvalidConfiguration("LABS needs n >= 2");
  return Objective("labs", n, labs_objective);
}

// ---- Ising ---------------------------------------------------------------

const std::array<std::pair<std::size_t, std::size_t>, kIsingEdges>& ising_edges() {
  static const auto edges = [] {
    std::array<std::pair<std::size_t, std::size_t>, kIsingEdges> e{};
    std::size_t k = 0;
    for (std::size_t r = 0; r < kIsingSide; ++r) {
      for (std::size_t c = 0; c + 1 < kIsingSide; ++c) e[k++] = {r * kIsingSide + c, r * kIsingSide + c + 1};
    }
    for (std::size_t r = 0; r + 1 < kIsingSide; ++r) {
      for (std::size_t c = 0; c < kIsingSide; ++c) e[k++] = {r * kIsingSide + c, (r + 1) * kIsingSide + c};
    }
    return e;
  }();
  return edges;
}

namespace {

constexpr std::size_t kIsingStates = std::size_t(1) << kIsingSpins;

// Bit e set iff the two endpoints of edge e carry equal spins.
const std::vector<std::uint32_t>& agreement_masks() {
  static const auto masks = [] {
    std::vector<std::uint32_t> out(kIsingStates);
    const auto& edges = ising_edges();
    for (std::size_t s = 0; s < kIsingStates; ++s) {
      std::uint32_t m = 0;
      for (std::size_t e = 0; e < kIsingEdges; ++e) {
        if (((s >> edges[e].first) & 1U) == ((s >> edges[e].second) & 1U)) m |= 1U << e;
      }
      out[s] = m;
    }
    return out;
  }();
  return masks;
}

std::vector<double> state_energies(const Eigen::VectorXd& couplings) {
  if (couplings.size() != Eigen::Index(kIsingEdges)) throw DimensionMismatch("ising: expected 24 couplings");
  const auto& masks = agreement_masks();
  std::vector<double> energy(kIsingStates);
  for (std::size_t s = 0; s < kIsingStates; ++s) {
    double v = 0.0;
    for (std::size_t e = 0; e < kIsingEdges; ++e) v += (masks[s] >> e & 1U) ? couplings[Eigen::Index(e)] : -couplings[Eigen::Index(e)];
    energy[s] = v;
  }
  return energy;
}

double log_sum_exp(const std::vector<double>& values) {
  const double top = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

}  // namespace

double ising_log_partition(const Eigen::VectorXd& couplings) { return log_sum_exp(state_energies(couplings)); }

IsingSpec make_ising(std::uint64_t seed, double reg_weight) {
  if (!(reg_weight >= 0.0)) throw InvalidConfiguration("ising: regularization weight must be non-negative");
  IsingSpec spec;
  spec.seed = seed;
  spec.reg_weight = reg_weight;
  spec.couplings.resize(Eigen::Index(kIsingEdges));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> magnitude(0.05, 5.0);
  std::bernoulli_distribution negative(0.5);
  for (Eigen::Index e = 0; e < spec.couplings.size(); ++e) {
    const double m = magnitude(rng);
    spec.couplings[e] = negative(rng) ? -m : m;
  }

  const auto energy = state_energies(spec.couplings);
  spec.log_partition = log_sum_exp(energy);
  spec.moments = Eigen::VectorXd::Zero(Eigen::Index(kIsingEdges));
  const auto& masks = agreement_masks();
  for (std::size_t s = 0; s < kIsingStates; ++s) {
    const double p = std::exp(energy[s] - spec.log_partition);
    for (std::size_t e = 0; e < kIsingEdges; ++e) spec.moments[Eigen::Index(e)] += (masks[s] >> e & 1U) ? p : -p;
  }
  return spec;
}

double ising_kl(const BinaryPoint& x, const IsingSpec& spec) {
  if (x.size() != kIsingEdges) {
    throw DimensionMismatch("ising: point has dimension " + std::to_string(x.size()) + ", expected 24");
  }
  Eigen::VectorXd reduced = Eigen::VectorXd::Zero(Eigen::Index(kIsingEdges));
  for (std::size_t e = 0; e < kIsingEdges; ++e) reduced[Eigen::Index(e)] = x[e] ? spec.couplings[Eigen::Index(e)] : 0.0;
  const double cross = (spec.couplings - reduced).dot(spec.moments);
  return cross + ising_log_partition(reduced) - spec.log_partition;
}

double ising_objective(const BinaryPoint& x, const IsingSpec& spec) {
  return ising_kl(x, spec) + spec.reg_weight * double(x.count());
}

std::string ising_to_json(const IsingSpec& spec) {
  nlohmann::json j;
  j["seed"] = spec.seed;
  j["couplings"] = std::vector<double>(spec.couplings.data(), spec.couplings.data() + spec.couplings.size());
  j["lambda"] = spec.reg_weight;
  return j.dump(2);
}

Objective make_ising_objective(IsingSpec spec) {
  auto shared = std::make_shared<const IsingSpec>(std::move(spec));
  return Objective("ising", kIsingEdges, [shared](const BinaryPoint& x) { return ising_objective(x, *shared); });
}

// ---- Tabular ---------------------------------------------------------------

std::size_t bits_per_symbol(std::size_t alphabet_size) {
  if (alphabet_size < 2) throw InvalidConfiguration("alphabet needs at least two symbols");
  return std::size_t(std::bit_width(alphabet_size - 1));
}

BinaryPoint encode_categorical(std::string_view sequence, std::string_view alphabet) {
  const auto width = bits_per_symbol(alphabet.size());
  BinaryPoint x(sequence.size() * width);
  for (std::size_t p = 0; p < sequence.size(); ++p) {
    const auto idx = alphabet.find(sequence[p]);
    if (idx == std::string_view::npos) {
      throw InvalidPoint("unknown symbol '" + std::string(1, sequence[p]) + "'");
    }
    for (std::size_t b = 0; b < width; ++b) x.set(p * width + b, (idx >> (width - 1 - b)) & 1U);
  }
  return x;
}

std::string decode_categorical(const BinaryPoint& x, std::string_view alphabet) {
  const auto width = bits_per_symbol(alphabet.size());
  if (x.size() % width != 0) throw DimensionMismatch("decode: dimension is not a multiple of the symbol width");
  std::string out(x.size() / width, ' ');
  for (std::size_t p = 0; p < out.size(); ++p) {
    std::size_t idx = 0;
    for (std::size_t b = 0; b < width; ++b) idx = (idx << 1) | std::size_t(x[p * width + b]);
    if (idx >= alphabet.size()) {
      throw InvalidPoint("code " + std::to_string(idx) + " at position " + std::to_string(p) + " has no symbol");
    }
    out[p] = alphabet[idx];
  }
  return out;
}

double TabularSpec::evaluate(const BinaryPoint& x) const {
  if (x.size() != dimension()) throw DimensionMismatch("tabular: dimension mismatch");
  const auto seq = decode_categorical(x, alphabet);
  const auto it = table.find(seq);
  if (it == table.end()) throw InvalidPoint("tabular: no entry for sequence " + seq);
  return sign * it->second;
}

std::vector<BinaryPoint> TabularSpec::worst_points(double fraction) const {
  std::vector<std::pair<double, std::string>> rows;
  rows.reserve(table.size());
  for (const auto& [seq, v] : table) rows.emplace_back(sign * v, seq);
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  const auto keep = std::max<std::size_t>(1, std::size_t(std::ceil(fraction * double(rows.size()))));
  std::vector<BinaryPoint> out;
  for (std::size_t i = 0; i < std::min(keep, rows.size()); ++i) out.push_back(encode_categorical(rows[i].second, alphabet));
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

// Enumerates every length-L sequence over the alphabet in lexicographic order
// until `fn` returns false.
template <typename Fn>
void for_each_sequence(const std::string& alphabet, std::size_t length, Fn fn) {
  std::vector<std::size_t> idx(length, 0);
  std::string seq(length, alphabet[0]);
  while (true) {
    if (!fn(seq)) return;
    std::size_t p = length;
    while (p > 0) {
      --p;
      if (++idx[p] < alphabet.size()) {
        seq[p] = alphabet[idx[p]];
        break;
      }
      idx[p] = 0;
      seq[p] = alphabet[0];
      if (p == 0) return;
    }
    if (length == 0) return;
  }
}

}  // namespace

TabularSpec load_tabular(const std::filesystem::path& path, double sign, std::optional<std::string> alphabet) {
  if (sign != 1.0 && sign != -1.0) throw InvalidConfiguration("tabular sign must be +1 or -1");
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line) || trim(line) != "sequence,value") {
    throw LoadError(path.string() + ":1: expected header 'sequence,value'");
  }

  TabularSpec spec;
  spec.sign = sign;
  std::unordered_map<std::string, std::size_t> line_of;
  std::set<char> symbols;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto row = trim(line);
    if (row.empty()) continue;
    const auto comma = row.find(',');
    const auto where = path.string() + ":" + std::to_string(lineno) + ": ";
    if (comma == std::string_view::npos) throw LoadError(where + "expected two columns");
    const auto seq = trim(row.substr(0, comma));
    const auto num = trim(row.substr(comma + 1));
    if (seq.empty()) throw LoadError(where + "empty sequence");
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), value);
    if (ec != std::errc() || ptr != num.data() + num.size() || !std::isfinite(value)) {
      throw LoadError(where + "invalid value '" + std::string(num) + "'");
    }
    if (spec.sequence_length == 0) spec.sequence_length = seq.size();
    if (seq.size() != spec.sequence_length) throw LoadError(where + "sequence length differs from the first row");
    const std::string key(seq);
    if (auto it = line_of.find(key); it != line_of.end()) {
      throw LoadError(where + "duplicate sequence " + key + " (first seen on line " + std::to_string(it->second) + ")");
    }
    line_of.emplace(key, lineno);
    symbols.insert(key.begin(), key.end());
    spec.table.emplace(key, value);
  }
  if (spec.table.empty()) throw LoadError(path.string() + ": no rows");

  spec.alphabet = alphabet ? *alphabet : std::string(symbols.begin(), symbols.end());
  if (std::set<char>(spec.alphabet.begin(), spec.alphabet.end()).size() != spec.alphabet.size()) {
    throw LoadError("alphabet has repeated symbols");
  }
  for (char c : symbols) {
    if (spec.alphabet.find(c) == std::string::npos) {
      throw LoadError("symbol '" + std::string(1, c) + "' is not in the alphabet");
    }
  }
  bits_per_symbol(spec.alphabet.size());

  std::optional<std::string> missing;
  for_each_sequence(spec.alphabet, spec.sequence_length, [&](const std::string& s) {
    if (!spec.table.contains(s)) {
      missing = s;
      return false;
    }
    return true;
  });
  if (missing) throw LoadError(path.string() + ": missing sequence " + *missing);
  if (spec.dimension() > kMaxDimension) throw LoadError("encoded dimension exceeds 64 bits");
  return spec;
}

void write_tabular_csv(const std::filesystem::path& path, const TabularSpec& spec) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write " + path.string());
  out << "sequence,value\n";
  char buf[64];
  for_each_sequence(spec.alphabet, spec.sequence_length, [&](const std::string& s) {
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, spec.table.at(s));
    out << s << ',' << std::string_view(buf, std::size_t(ptr - buf)) << '\n';
    return true;
  });
}

TabularSpec make_synthetic_table(std::string alphabet, std::size_t length, std::uint64_t seed) {
  const std::size_t a = alphabet.size();
  bits_per_symbol(a);
  if (length == 0) throw InvalidConfiguration("synthetic table needs a positive length");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> unary(length * a);
  for (auto& v : unary) v = normal(rng);
  std::vector<double> pair(length * a * a);
  for (auto& v : pair) v = 0.5 * normal(rng);

  TabularSpec spec;
  spec.alphabet = std::move(alphabet);
  spec.sequence_length = length;
  for_each_sequence(spec.alphabet, length, [&](const std::string& s) {
    double v = 0.0;
    for (std::size_t p = 0; p < length; ++p) {
      const auto i = spec.alphabet.find(s[p]);
      v += unary[p * a + i];
      if (p + 1 < length) v += pair[(p * a + i) * a + spec.alphabet.find(s[p + 1])];
    }
    spec.table.emplace(s, v);
    return true;
  });
  if (spec.dimension() > kMaxDimension) throw InvalidConfiguration("encoded dimension exceeds 64 bits");
  return spec;
}

Objective make_tabular_objective(std::shared_ptr<const TabularSpec> spec) {
  const auto n = spec->dimension();
  return Objective("tabular", n, [spec = std::move(spec)](const BinaryPoint& x) { return spec->evaluate(x); });
}

}  // namespace mercbo
