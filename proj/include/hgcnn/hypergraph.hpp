#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hgcnn/linalg.hpp"

namespace hgcnn {

/// A weighted hypergraph: each hyperedge is a set of >= 2 distinct vertex
/// indices and carries a positive weight (the diagonal of W). Immutable after
/// validation; duplicate hyperedges are allowed and contribute additively to
/// the vertex degrees.
struct Hypergraph {
    int n_vertices = 0;
    std::vector<std::vector<int>> hyperedges;  // each sorted ascending
    std::vector<double> edge_weights;

    int n_edges() const { return static_cast<int>(hyperedges.size()); }

    /// Throws std::invalid_argument if any structural invariant is broken.
    void validate() const;

    /// True when every hyperedge has exactly k vertices.
    bool is_uniform(int k) const;
};

/// Builds a hypergraph from raw parts, normalizing each hyperedge to sorted
/// order and validating. Weights default to 1 when omitted.
Hypergraph make_hypergraph(int n_vertices,
                           std::vector<std::vector<int>> hyperedges,
                           std::vector<double> edge_weights = {});

/// Binary |V| x |E| incidence matrix H with H(v,e) = 1 iff v belongs to e.
struct IncidenceMatrix {
    Matrix entries;
};

/// Vertex degrees d(v) = sum_e w(e) H(v,e) and hyperedge degrees
/// delta(e) = sum_v H(v,e).
struct DegreeDiagonals {
    Vector vertex_degrees;
    IndexVector hyperedge_degrees;
};

/// Normalized hypergraph Laplacian L = I - Dv^{-1/2} H W De^{-1} H^T Dv^{-1/2};
/// symmetric PSD with spectrum in [0,1]. The eigendecomposition is filled in
/// lazily by the spectral module.
struct HypergraphLaplacian {
    Matrix matrix;
    std::optional<Vector> eigenvalues;   // ascending
    std::optional<Matrix> eigenvectors;  // orthonormal columns
};

IncidenceMatrix build_incidence(const Hypergraph& hg);

DegreeDiagonals compute_degrees(const Hypergraph& hg, const IncidenceMatrix& H);

HypergraphLaplacian normalized_laplacian(const Hypergraph& hg);

/// Simple normalized graph Laplacian I - D^{-1/2} A D^{-1/2} of the complete
/// graph over the given 2D/3D coordinates, with edge weights
/// w_ij = exp(-||c_i - c_j||^2). Used by the simple-graph model variant.
/// Spectrum lies in [0,2]. Points must number >= 2.
HypergraphLaplacian simple_complete_graph_laplacian(const std::vector<Vector>& coords);

/// Text serialization. Header "hypergraph v1 <n_vertices> <n_edges>", then one
/// line per hyperedge: "w=<weight> <v0> <v1> ..." with indices ascending.
/// Weights are written with 17 significant digits so the round trip is
/// bit-exact.
void save_hypergraph(std::ostream& out, const Hypergraph& hg);
Hypergraph load_hypergraph(std::istream& in);
void save_hypergraph_file(const std::string& path, const Hypergraph& hg);
Hypergraph load_hypergraph_file(const std::string& path);

}  // namespace hgcnn
