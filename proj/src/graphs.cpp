#include "confsel/graphs.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace confsel {

void Skeleton::connect(int a, int b) {
  if (a == b) throw std::invalid_argument("skeleton: self-loop");
  adj[static_cast<std::size_t>(a) * p + b] = 1;
  adj[static_cast<std::size_t>(b) * p + a] = 1;
}

void Skeleton::disconnect(int a, int b) {
  adj[static_cast<std::size_t>(a) * p + b] = 0;
  adj[static_cast<std::size_t>(b) * p + a] = 0;
}

std::vector<int> Skeleton::neighbors(int v) const {
  std::vector<int> out;
  for (int u = 0; u < p; ++u)
    if (u != v && adjacent(v, u)) out.push_back(u);
  return out;
}

int Skeleton::edge_count() const {
  int c = 0;
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b)
      if (adjacent(a, b)) ++c;
  return c;
}

std::vector<int> markov_blanket_undirected(const Skeleton& g, int v) { return g.neighbors(v); }

Dag Dag::with_vertices(int n_vertices) {
  Dag g;
  g.p = n_vertices;
  g.parent.resize(static_cast<std::size_t>(n_vertices));
  g.names.reserve(static_cast<std::size_t>(n_vertices));
  for (int v = 0; v < n_vertices; ++v) g.names.push_back("V" + std::to_string(v));
  return g;
}

Dag Dag::with_names(std::vector<std::string> vertex_names) {
  Dag g;
  g.p = static_cast<int>(vertex_names.size());
  g.names = std::move(vertex_names);
  g.parent.resize(static_cast<std::size_t>(g.p));
  return g;
}

int Dag::index_of(const std::string& name) const {
  for (int v = 0; v < p; ++v)
    if (names[static_cast<std::size_t>(v)] == name) return v;
  throw std::invalid_argument("dag: no vertex named '" + name + "'");
}

bool Dag::has_edge(int from, int to) const {
  const auto& pa = parent[static_cast<std::size_t>(to)];
  return std::binary_search(pa.begin(), pa.end(), from);
}

void Dag::add_edge(int from, int to) {
  if (from == to) throw std::invalid_argument("dag: self-loop");
  if (has_edge(from, to)) throw std::invalid_argument("dag: duplicate edge");
  auto& pa = parent[static_cast<std::size_t>(to)];
  pa.insert(std::upper_bound(pa.begin(), pa.end(), from), from);
}

void Dag::remove_edge(int from, int to) {
  auto& pa = parent[static_cast<std::size_t>(to)];
  const auto it = std::lower_bound(pa.begin(), pa.end(), from);
  if (it == pa.end() || *it != from) throw std::invalid_argument("dag: edge not present");
  pa.erase(it);
}

std::vector<std::vector<int>> Dag::children_lists() const {
  std::vector<std::vector<int>> ch(static_cast<std::size_t>(p));
  for (int v = 0; v < p; ++v)
    for (int a : parent[static_cast<std::size_t>(v)]) ch[static_cast<std::size_t>(a)].push_back(v);
  return ch;
}

std::vector<int> Dag::topological_order() const {
  std::vector<int> indeg(static_cast<std::size_t>(p), 0);
  for (int v = 0; v < p; ++v)
    indeg[static_cast<std::size_t>(v)] = static_cast<int>(parent[static_cast<std::size_t>(v)].size());
  const auto ch = children_lists();
  std::vector<int> stack;
  for (int v = 0; v < p; ++v)
    if (indeg[static_cast<std::size_t>(v)] == 0) stack.push_back(v);
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(p));
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (int c : ch[static_cast<std::size_t>(v)])
      if (--indeg[static_cast<std::size_t>(c)] == 0) stack.push_back(c);
  }
  if (static_cast<int>(order.size()) != p) throw std::logic_error("dag: cycle detected");
  return order;
}

bool Dag::is_acyclic() const {
  try {
    topological_order();
    return true;
  } catch (const std::logic_error&) {
    return false;
  }
}

int Dag::edge_count() const {
  int c = 0;
  for (int v = 0; v < p; ++v) c += static_cast<int>(parent[static_cast<std::size_t>(v)].size());
  return c;
}

Skeleton skeleton_of(const Dag& g) {
  Skeleton s(g.p);
  for (int v = 0; v < g.p; ++v)
    for (int a : g.parents(v)) s.connect(a, v);
  return s;
}

bool d_separated(const Dag& g, int i, int j, const std::vector<int>& cond) {
  if (i == j) throw std::invalid_argument("d_separated: identical endpoints");
  std::vector<char> in_k(static_cast<std::size_t>(g.p), 0);
  for (int k : cond) {
    if (k == i || k == j) throw std::invalid_argument("d_separated: endpoint in conditioning set");
    in_k[static_cast<std::size_t>(k)] = 1;
  }

  // Ancestors of the conditioning set (inclusive).
  std::vector<char> an_k(in_k.begin(), in_k.end());
  std::vector<int> stack(cond.begin(), cond.end());
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int a : g.parents(v))
      if (!an_k[static_cast<std::size_t>(a)]) {
        an_k[static_cast<std::size_t>(a)] = 1;
        stack.push_back(a);
      }
  }

  const auto ch = g.children_lists();
  // State (vertex, direction): UP = entered from a child, DOWN = from a parent.
  enum { kUp = 0, kDown = 1 };
  std::vector<char> seen(static_cast<std::size_t>(g.p) * 2, 0);
  std::vector<std::pair<int, int>> frontier{{i, kUp}};
  while (!frontier.empty()) {
    const auto [v, dir] = frontier.back();
    frontier.pop_back();
    char& mark = seen[static_cast<std::size_t>(v) * 2 + dir];
    if (mark) continue;
    mark = 1;
    if (v == j) return false;
    if (dir == kUp) {
      if (!in_k[static_cast<std::size_t>(v)]) {
        for (int a : g.parents(v)) frontier.push_back({a, kUp});
        for (int c : ch[static_cast<std::size_t>(v)]) frontier.push_back({c, kDown});
      }
    } else {
      if (!in_k[static_cast<std::size_t>(v)])
        for (int c : ch[static_cast<std::size_t>(v)]) frontier.push_back({c, kDown});
      if (an_k[static_cast<std::size_t>(v)])  // collider on an active path
        for (int a : g.parents(v)) frontier.push_back({a, kUp});
    }
  }
  return true;
}

DsepOracle::DsepOracle(Dag g, const std::vector<int>& observed)
    : dag_(std::move(g)), observed_(static_cast<std::size_t>(dag_.p), 0) {
  for (int v : observed) observed_.at(static_cast<std::size_t>(v)) = 1;
}

bool DsepOracle::independent(int i, int j, const std::vector<int>& cond) const {
  if (!observed_.at(static_cast<std::size_t>(i)) || !observed_.at(static_cast<std::size_t>(j)))
    throw std::invalid_argument("dsep oracle: query endpoint is latent");
  for (int k : cond)
    if (!observed_.at(static_cast<std::size_t>(k)))
      throw std::invalid_argument("dsep oracle: latent vertex in conditioning set");
  return d_separated(dag_, i, j, cond);
}

std::string to_edge_list(const Dag& g) {
  std::ostringstream out;
  for (int v = 0; v < g.p; ++v)
    for (int a : g.parents(v))
      out << g.names[static_cast<std::size_t>(a)] << " -> "
          << g.names[static_cast<std::size_t>(v)] << "\n";
  return out.str();
}

Dag dag_from_edge_list(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> names;
  std::vector<std::pair<int, int>> edges;
  const auto intern = [&](const std::string& name) {
    for (std::size_t k = 0; k < names.size(); ++k)
      if (names[k] == name) return static_cast<int>(k);
    names.push_back(name);
    return static_cast<int>(names.size()) - 1;
  };
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string from, arrow, to;
    if (!(ls >> from)) continue;  // blank line
    if (!(ls >> arrow >> to) || arrow != "->")
      throw DataFormatError("edge list: expected 'parent -> child', got '" + line + "'");
    edges.emplace_back(intern(from), intern(to));
  }
  Dag g = Dag::with_names(std::move(names));
  for (const auto& [a, b] : edges) g.add_edge(a, b);
  return g;
}

namespace {

Dag core_benchmark_dag(bool with_latents) {
  std::vector<std::string> names;
  for (int k = 1; k <= 10; ++k) names.push_back("X" + std::to_string(k));
  names.push_back("T");
  names.push_back("Y");
  if (with_latents) {
    names.push_back("U1");
    names.push_back("U2");
    names.push_back("U3");
  }
  Dag g = Dag::with_names(std::move(names));
  const auto e = [&](const char* a, const char* b) { g.add_edge(g.index_of(a), g.index_of(b)); };
  e("X2", "X1");
  e("X1", "T");
  e("X2", "T");
  e("X3", "T");
  e("X4", "T");
  e("X7", "T");
  e("X7", "X8");
  e("X6", "X5");
  e("X1", "Y");
  e("X2", "Y");
  e("X5", "Y");
  e("X6", "Y");
  e("X8", "Y");
  if (with_latents) {
    e("U1", "T");
    e("U1", "X9");
    e("U2", "X9");
    e("U2", "Y");
    e("U3", "X4");
    e("U3", "Y");
  }
  return g;
}

}  // namespace

Dag setting1_dag() { return core_benchmark_dag(false); }
Dag setting2_dag() { return core_benchmark_dag(true); }

}  // namespace confsel
