#include "qpr/designs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "qpr/rng.hpp"

namespace qpr {
namespace {

int ceil_log2(int n) {
  int k = 0;
  while ((1 << k) < n) ++k;
  return std::max(k, 1);  // log2(2) = 1; n = 2 still gets one round
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

std::vector<Group> random_pair_groups(int n, Rng& rng) {
  const int rounds = 2 * ceil_log2(n);
  std::vector<Group> groups;
  std::vector<int> perm(n);
  for (int r = 0; r < rounds; ++r) {
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    for (int i = 0; i + 1 < n; i += 2)
      groups.push_back(Group{{perm[i], perm[i + 1]}});
    if (n % 2 == 1) {
      // Leftover mode pairs with a random partner; degree near-regular.
      const int left = perm[n - 1];
      int other = static_cast<int>(rng.uniform_below(n - 1));
      if (other >= left) ++other;
      groups.push_back(Group{{left, other}});
    }
  }
  return groups;
}

std::vector<Group> random_l_groups(int n, int l_modes, Rng& rng) {
  const int n_groups = static_cast<int>(
      std::ceil(static_cast<double>(n) * ceil_log2(n)));
  std::vector<int> degree(n, 0);
  std::vector<int> order(n);
  std::vector<std::uint64_t> key(n);
  std::vector<Group> groups;
  groups.reserve(n_groups);
  for (int g = 0; g < n_groups; ++g) {
    // L distinct minimum-degree modes, random tie-break: keeps every mode's
    // multiplicity within +-1 of L*log2(n).
    for (int i = 0; i < n; ++i) key[i] = rng.next_u64();
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return degree[a] != degree[b] ? degree[a] < degree[b] : key[a] < key[b];
    });
    Group grp;
    grp.members.assign(order.begin(), order.begin() + l_modes);
    for (int m : grp.members) ++degree[m];
    groups.push_back(std::move(grp));
  }
  return groups;
}

bool groups_connected(int n, const std::vector<Group>& groups) {
  UnionFind uf(n);
  for (const auto& g : groups)
    for (std::size_t i = 1; i < g.members.size(); ++i)
      uf.unite(g.members[0], g.members[i]);
  const int root = uf.find(0);
  for (int i = 1; i < n; ++i)
    if (uf.find(i) != root) return false;
  return true;
}

// Connect remaining components by adding groups spanning them.
void add_bridging_groups(int n, int l_modes, Rng& rng,
                         std::vector<Group>& groups) {
  for (;;) {
    UnionFind uf(n);
    for (const auto& g : groups)
      for (std::size_t i = 1; i < g.members.size(); ++i)
        uf.unite(g.members[0], g.members[i]);
    std::vector<int> reps;
    for (int i = 0; i < n; ++i)
      if (uf.find(i) == i) reps.push_back(i);
    if (reps.size() <= 1) return;
    rng.shuffle(reps);
    Group bridge;
    for (int i = 0; i < l_modes && i < static_cast<int>(reps.size()); ++i)
      bridge.members.push_back(reps[i]);
    while (static_cast<int>(bridge.members.size()) < l_modes) {
      int extra = static_cast<int>(rng.uniform_below(n));
      if (std::find(bridge.members.begin(), bridge.members.end(), extra) ==
          bridge.members.end())
        bridge.members.push_back(extra);
    }
    groups.push_back(std::move(bridge));
  }
}

}  // namespace

CodeBlock dft_code(int q_rows, int l_cols) {
  if (l_cols < 1 || q_rows < l_cols)
    throw std::invalid_argument("dft_code: need 1 <= L <= Q");
  CodeBlock block;
  block.entries.resize(q_rows, l_cols);
  const double norm = 1.0 / std::sqrt(static_cast<double>(q_rows));
  for (int q = 0; q < q_rows; ++q)
    for (int l = 0; l < l_cols; ++l) {
      // Exact values at quarter turns keep identities like the holographic
      // code's sum_q w_q^2 = 0 free of sin(pi) round-off.
      const int r = (q * (l + 1)) % q_rows;
      Complex unit;
      if ((4 * r) % q_rows == 0) {
        static const Complex kQuarter[4] = {
            {1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
        unit = kQuarter[(4 * r) / q_rows];
      } else {
        unit = std::polar(1.0, 2.0 * M_PI * r / q_rows);
      }
      block.entries(q, l) = norm * unit;
    }
  return block;
}

MeasurementDesign random_group_design(int n, int l_modes, int q_rows,
                                      std::uint64_t seed) {
  if (l_modes < 2 || n < l_modes)
    throw std::invalid_argument("random_group_design: need n >= L >= 2");
  if (q_rows < l_modes)
    throw std::invalid_argument("random_group_design: need Q >= L");

  constexpr int kMaxRetries = 32;
  std::vector<Group> groups;
  std::uint64_t used_seed = seed;
  bool connected = false;
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    used_seed = attempt == 0 ? seed : Rng::derive(seed, attempt);
    Rng rng(used_seed);
    groups = l_modes == 2 ? random_pair_groups(n, rng)
                          : random_l_groups(n, l_modes, rng);
    if (groups_connected(n, groups)) {
      connected = true;
      break;
    }
  }
  if (!connected) {
    Rng rng(Rng::derive(seed, 0xB71D6E));
    add_bridging_groups(n, l_modes, rng, groups);
  }

  MeasurementDesign design;
  design.n_modes = n;
  design.l_modes = l_modes;
  design.q_rows = q_rows;
  design.seed = seed;
  design.code = dft_code(q_rows, l_modes);
  design.groups = std::move(groups);
  design.kind = "random_group";
  return normalize_columns(std::move(design));
}

bool is_connected(const MeasurementDesign& design) {
  return groups_connected(design.n_modes, design.groups);
}

MeasurementDesign holographic_design(int n, double rho) {
  if (n < 1) throw std::invalid_argument("holographic_design: n must be >= 1");
  if (rho < 0.0)
    throw std::invalid_argument("holographic_design: rho must be >= 0");
  MeasurementDesign design;
  design.n_modes = n;
  design.l_modes = 1;
  design.q_rows = 4;
  design.code = dft_code(4, 1);  // column (1, j, -1, -j)/2
  design.groups.reserve(n);
  for (int i = 0; i < n; ++i) design.groups.push_back(Group{{i}});
  design.column_scale = RVec::Ones(n);
  design.reference = RVec::Constant(4 * n, rho);
  design.kind = "holographic";
  return design;
}

std::vector<int> mode_degrees(const MeasurementDesign& design) {
  std::vector<int> degree(design.n_modes, 0);
  for (const auto& g : design.groups)
    for (int m : g.members) {
      if (m < 0 || m >= design.n_modes)
        throw std::invalid_argument("design: mode index out of range");
      ++degree[m];
    }
  return degree;
}

MeasurementDesign normalize_columns(MeasurementDesign design) {
  const auto degree = mode_degrees(design);
  design.column_scale.resize(design.n_modes);
  for (int i = 0; i < design.n_modes; ++i) {
    if (degree[i] == 0)
      throw std::invalid_argument("normalize_columns: isolated mode");
    design.column_scale[i] = 1.0 / std::sqrt(static_cast<double>(degree[i]));
  }
  return design;
}

Eigen::MatrixXcd materialize_rows(const MeasurementDesign& design,
                                  std::int64_t max_elements) {
  const std::int64_t m = design.m_rows();
  if (m == 0) throw std::invalid_argument("materialize_rows: empty design");
  if (m * design.n_modes > max_elements)
    throw std::invalid_argument("materialize_rows: size guard exceeded");
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(m, design.n_modes);
  const int q_rows = design.code.q_rows();
  for (std::size_t g = 0; g < design.groups.size(); ++g) {
    const auto& members = design.groups[g].members;
    for (int q = 0; q < q_rows; ++q)
      for (std::size_t l = 0; l < members.size(); ++l)
        a(static_cast<int>(g) * q_rows + q, members[l]) =
            design.code.entries(q, static_cast<int>(l)) *
            design.column_scale[members[l]];
  }
  return a;
}

MeasurementDesign all_combinations_design(int n, int l_modes, int q_rows) {
  if (n > 12)
    throw std::invalid_argument("all_combinations_design: oracle sizes only");
  if (l_modes < 2 || n < l_modes || q_rows < l_modes)
    throw std::invalid_argument("all_combinations_design: bad parameters");
  MeasurementDesign design;
  design.n_modes = n;
  design.l_modes = l_modes;
  design.q_rows = q_rows;
  design.code = dft_code(q_rows, l_modes);
  design.kind = "all_combinations";
  std::vector<int> combo(l_modes);
  std::iota(combo.begin(), combo.end(), 0);
  for (;;) {
    design.groups.push_back(Group{combo});
    int i = l_modes - 1;
    while (i >= 0 && combo[i] == n - l_modes + i) --i;
    if (i < 0) break;
    ++combo[i];
    for (int j = i + 1; j < l_modes; ++j) combo[j] = combo[j - 1] + 1;
  }
  return normalize_columns(std::move(design));
}

std::string design_to_json(const MeasurementDesign& design) {
  nlohmann::ordered_json j;
  j["n"] = design.n_modes;
  j["L"] = design.l_modes;
  j["Q"] = design.q_rows;
  j["seed"] = design.seed;
  j["kind"] = design.kind;
  auto groups = nlohmann::ordered_json::array();
  for (const auto& g : design.groups) groups.push_back(g.members);
  j["groups"] = std::move(groups);
  j["column_scale"] = std::vector<double>(
      design.column_scale.data(),
      design.column_scale.data() + design.column_scale.size());
  if (design.reference) {
    j["reference"] = std::vector<double>(
        design.reference->data(),
        design.reference->data() + design.reference->size());
  } else {
    j["reference"] = nullptr;
  }
  return j.dump();
}

MeasurementDesign design_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  MeasurementDesign design;
  design.n_modes = j.at("n").get<int>();
  design.l_modes = j.at("L").get<int>();
  design.q_rows = j.at("Q").get<int>();
  design.seed = j.at("seed").get<std::uint64_t>();
  design.kind = j.value("kind", std::string("random_group"));
  design.code = dft_code(design.q_rows, design.l_modes);
  for (const auto& g : j.at("groups"))
    design.groups.push_back(Group{g.get<std::vector<int>>()});
  const auto scale = j.at("column_scale").get<std::vector<double>>();
  design.column_scale =
      Eigen::Map<const RVec>(scale.data(), static_cast<Eigen::Index>(scale.size()));
  if (!j.at("reference").is_null()) {
    const auto ref = j.at("reference").get<std::vector<double>>();
    design.reference =
        Eigen::Map<const RVec>(ref.data(), static_cast<Eigen::Index>(ref.size()));
  }
  return design;
}

}  // namespace qpr
