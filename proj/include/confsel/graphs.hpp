#pragma once

#include <string>
#include <vector>

#include "confsel/citest.hpp"

namespace confsel {

// Undirected adjacency over p vertices.
struct Skeleton {
  int p = 0;
  std::vector<char> adj;  // p*p, symmetric, zero diagonal

  explicit Skeleton(int n_vertices = 0) { resize(n_vertices); }
  void resize(int n_vertices) {
    p = n_vertices;
    adj.assign(static_cast<std::size_t>(p) * p, 0);
  }
  bool adjacent(int a, int b) const { return adj[static_cast<std::size_t>(a) * p + b] != 0; }
  void connect(int a, int b);
  void disconnect(int a, int b);
  std::vector<int> neighbors(int v) const;
  int edge_count() const;
};

// Markov blanket in an undirected graph: the neighbor set.
std::vector<int> markov_blanket_undirected(const Skeleton& g, int v);

struct Dag {
  int p = 0;
  std::vector<std::string> names;
  std::vector<std::vector<int>> parent;  // sorted ascending

  static Dag with_vertices(int n_vertices);
  static Dag with_names(std::vector<std::string> vertex_names);

  int index_of(const std::string& name) const;  // throws if absent
  bool has_edge(int from, int to) const;
  void add_edge(int from, int to);     // throws on self-loop or duplicate
  void remove_edge(int from, int to);  // throws if absent
  const std::vector<int>& parents(int v) const { return parent[static_cast<std::size_t>(v)]; }
  std::vector<std::vector<int>> children_lists() const;
  bool is_acyclic() const;
  // Throws std::logic_error when the graph has a cycle.
  std::vector<int> topological_order() const;
  int edge_count() const;
};

// Undirected copy of the DAG's edges.
Skeleton skeleton_of(const Dag& g);

// Reachability formulation of d-separation (Bayes-ball). K must not contain
// i or j.
bool d_separated(const Dag& g, int i, int j, const std::vector<int>& cond);

// Perfect conditional-independence oracle backed by d-separation. Vertices
// outside `observed` act as latent: they may be queried endpoints never, and
// may not appear in conditioning sets.
class DsepOracle final : public CiOracle {
 public:
  DsepOracle(Dag g, const std::vector<int>& observed);
  bool independent(int i, int j, const std::vector<int>& cond) const override;
  const Dag& dag() const { return dag_; }

 private:
  Dag dag_;
  std::vector<char> observed_;
};

// "parent -> child" per line, blank lines ignored; vertex set is the set of
// mentioned names in first-appearance order.
std::string to_edge_list(const Dag& g);
Dag dag_from_edge_list(const std::string& text);

// Benchmark graphs for the simulation settings. Vertices are named X1..X10,
// T, Y; the second adds latent U1, U2, U3. The treatment -> outcome edge is
// deliberately absent: Y plays the role of the potential outcome with the
// assignment mechanism severed, which is the graph under which "independent
// of T given S" captures unconfoundedness and under which the population
// target subsets are defined.
Dag setting1_dag();
Dag setting2_dag();

}  // namespace confsel
