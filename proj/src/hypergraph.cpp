#include "hgcnn/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hgcnn {

void Hypergraph::validate() const {
    if (n_vertices <= 0) throw std::invalid_argument("hypergraph: n_vertices must be positive");
    if (hyperedges.size() != edge_weights.size())
        throw std::invalid_argument("hypergraph: weight count does not match hyperedge count");
    for (std::size_t e = 0; e < hyperedges.size(); ++e) {
        const auto& edge = hyperedges[e];
        if (edge.size() < 2)
            throw std::invalid_argument("hypergraph: hyperedge " + std::to_string(e) +
                                        " has fewer than 2 vertices");
        for (std::size_t i = 0; i < edge.size(); ++i) {
            if (edge[i] < 0 || edge[i] >= n_vertices)
                throw std::invalid_argument("hypergraph: vertex index out of range in hyperedge " +
                                            std::to_string(e));
            if (i > 0 && edge[i] <= edge[i - 1])
                throw std::invalid_argument("hypergraph: hyperedge " + std::to_string(e) +
                                            " is not sorted with distinct vertices");
        }
        if (!(edge_weights[e] > 0.0) || !std::isfinite(edge_weights[e]))
            throw std::invalid_argument("hypergraph: nonpositive weight on hyperedge " +
                                        std::to_string(e));
    }
}

bool Hypergraph::is_uniform(int k) const {
    for (const auto& edge : hyperedges)
        if (static_cast<int>(edge.size()) != k) return false;
    return true;
}

Hypergraph make_hypergraph(int n_vertices, std::vector<std::vector<int>> hyperedges,
                           std::vector<double> edge_weights) {
    Hypergraph hg;
    hg.n_vertices = n_vertices;
    hg.hyperedges = std::move(hyperedges);
    for (auto& edge : hg.hyperedges) std::sort(edge.begin(), edge.end());
    if (edge_weights.empty())
        hg.edge_weights.assign(hg.hyperedges.size(), 1.0);
    else
        hg.edge_weights = std::move(edge_weights);
    hg.validate();
    return hg;
}

IncidenceMatrix build_incidence(const Hypergraph& hg) {
    if (hg.hyperedges.empty()) throw std::invalid_argument("build_incidence: no hyperedges");
    IncidenceMatrix H;
    H.entries = Matrix::Zero(hg.n_vertices, hg.n_edges());
    for (int e = 0; e < hg.n_edges(); ++e)
        for (int v : hg.hyperedges[e]) H.entries(v, e) = 1.0;
    return H;
}

DegreeDiagonals compute_degrees(const Hypergraph& hg, const IncidenceMatrix& H) {
    DegreeDiagonals deg;
    const int n = hg.n_vertices;
    const int m = hg.n_edges();
    deg.vertex_degrees = Vector::Zero(n);
    deg.hyperedge_degrees = IndexVector::Zero(m);
    for (int e = 0; e < m; ++e) {
        int card = 0;
        for (int v = 0; v < n; ++v) {
            if (H.entries(v, e) != 0.0) {
                deg.vertex_degrees(v) += hg.edge_weights[e];
                ++card;
            }
        }
        deg.hyperedge_degrees(e) = card;
    }
    return deg;
}

HypergraphLaplacian normalized_laplacian(const Hypergraph& hg) {
    const IncidenceMatrix H = build_incidence(hg);
    const DegreeDiagonals deg = compute_degrees(hg, H);
    const int n = hg.n_vertices;

    for (int v = 0; v < n; ++v)
        if (deg.vertex_degrees(v) <= 0.0)
            throw std::invalid_argument("normalized_laplacian: isolated vertex " + std::to_string(v));

    // Dv^{-1/2} H (W De^{-1})^{1/2}; the Laplacian is I minus its Gram matrix.
    // The rank update fills the lower triangle, which is then mirrored, so the
    // result is symmetric bit for bit.
    Matrix M = H.entries;
    for (int e = 0; e < hg.n_edges(); ++e) {
        const double s = std::sqrt(hg.edge_weights[e] / deg.hyperedge_degrees(e));
        M.col(e) *= s;
    }
    for (int v = 0; v < n; ++v) M.row(v) *= 1.0 / std::sqrt(deg.vertex_degrees(v));

    Matrix theta = Matrix::Zero(n, n);
    theta.selfadjointView<Eigen::Lower>().rankUpdate(M);
    theta.triangularView<Eigen::StrictlyUpper>() = theta.transpose();

    HypergraphLaplacian L;
    L.matrix = Matrix::Identity(n, n) - theta;
    return L;
}

HypergraphLaplacian simple_complete_graph_laplacian(const std::vector<Vector>& coords) {
    const int n = static_cast<int>(coords.size());
    if (n < 2)
        throw std::invalid_argument("simple_complete_graph_laplacian: need at least 2 points");
    for (const auto& c : coords)
        if (!c.allFinite())
            throw std::invalid_argument("simple_complete_graph_laplacian: non-finite coordinate");

    Matrix A = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double w = std::exp(-(coords[i] - coords[j]).squaredNorm());
            A(i, j) = w;
            A(j, i) = w;
        }
    }
    Vector d = A.rowwise().sum();
    for (int i = 0; i < n; ++i)
        if (d(i) <= 0.0)
            throw std::invalid_argument("simple_complete_graph_laplacian: isolated vertex " +
                                        std::to_string(i));
    Vector dis = d.cwiseSqrt().cwiseInverse();
    HypergraphLaplacian L;
    L.matrix = Matrix::Identity(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double v = -dis(i) * A(i, j) * dis(j);
            L.matrix(i, j) = v;
            L.matrix(j, i) = v;
        }
    }
    return L;
}

void save_hypergraph(std::ostream& out, const Hypergraph& hg) {
    hg.validate();
    out << "hypergraph v1 " << hg.n_vertices << ' ' << hg.n_edges() << '\n';
    char buf[64];
    for (int e = 0; e < hg.n_edges(); ++e) {
        std::snprintf(buf, sizeof buf, "%.17g", hg.edge_weights[e]);
        out << "w=" << buf;
        for (int v : hg.hyperedges[e]) out << ' ' << v;
        out << '\n';
    }
}

Hypergraph load_hypergraph(std::istream& in) {
    std::string tag, ver;
    int n = 0, m = 0;
    if (!(in >> tag >> ver >> n >> m) || tag != "hypergraph" || ver != "v1")
        throw std::runtime_error("load_hypergraph: bad header");
    std::string line;
    std::getline(in, line);  // consume rest of header line
    Hypergraph hg;
    hg.n_vertices = n;
    hg.hyperedges.reserve(m);
    hg.edge_weights.reserve(m);
    for (int e = 0; e < m; ++e) {
        if (!std::getline(in, line))
            throw std::runtime_error("load_hypergraph: truncated file at edge " + std::to_string(e));
        std::istringstream ls(line);
        std::string wtok;
        ls >> wtok;
        if (wtok.rfind("w=", 0) != 0)
            throw std::runtime_error("load_hypergraph: malformed edge line " + std::to_string(e));
        hg.edge_weights.push_back(std::strtod(wtok.c_str() + 2, nullptr));
        std::vector<int> edge;
        int v;
        while (ls >> v) edge.push_back(v);
        hg.hyperedges.push_back(std::move(edge));
    }
    hg.validate();
    return hg;
}

void save_hypergraph_file(const std::string& path, const Hypergraph& hg) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    save_hypergraph(out, hg);
}

Hypergraph load_hypergraph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return load_hypergraph(in);
}

}  // namespace hgcnn
