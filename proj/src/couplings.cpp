#include "babylon/couplings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "babylon/numerics.hpp"
#include "babylon/rng.hpp"

namespace babylon {

namespace {

void check_site(int i, int n, const char* what) {
    if (i < 0 || i >= n)
        throw std::out_of_range(std::string(what) + " index " + std::to_string(i) +
                                " out of range for n=" + std::to_string(n));
}

void sort_and_check_edges(int n, std::vector<Edge>& edges) {
    for (const Edge& e : edges) {
        if (e.i < 0 || e.j >= n || e.i >= e.j)
            throw ValidationError("edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                                  ") violates 0 <= i < j < n with n=" + std::to_string(n));
        if (!std::isfinite(e.w))
            throw ValidationError("coupling (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                                  ") is not finite");
    }
    std::sort(edges.begin(), edges.end(),
              [](const Edge& a, const Edge& b) { return std::pair(a.i, a.j) < std::pair(b.i, b.j); });
    for (std::size_t k = 1; k < edges.size(); ++k)
        if (edges[k - 1].i == edges[k].i && edges[k - 1].j == edges[k].j)
            throw ValidationError("duplicate coupling for pair (" + std::to_string(edges[k].i) +
                                  ", " + std::to_string(edges[k].j) + ")");
}

}  // namespace

CouplingMatrix CouplingMatrix::zero(int n) { return from_edges(n, {}); }

CouplingMatrix CouplingMatrix::from_edges(int n, std::vector<Edge> edges) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    std::erase_if(edges, [](const Edge& e) { return e.w == 0.0; });
    sort_and_check_edges(n, edges);

    CouplingMatrix g;
    g.n_ = n;
    g.edges_ = std::move(edges);
    if (n <= kDenseCap) {
        g.dense_.assign(static_cast<std::size_t>(n) * n, 0.0);
        for (const Edge& e : g.edges_) {
            g.dense_[static_cast<std::size_t>(e.i) * n + e.j] = e.w;
            g.dense_[static_cast<std::size_t>(e.j) * n + e.i] = e.w;
        }
    }
    KahanSum acc;
    for (const Edge& e : g.edges_) acc.add(std::abs(e.w));
    g.abs_sum_ = 2.0 * acc.value();
    return g;
}

CouplingMatrix CouplingMatrix::from_dense(int n, const std::vector<double>& entries) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (entries.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("dense entries must have n*n elements");
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i) {
        if (entries[static_cast<std::size_t>(i) * n + i] != 0.0)
            throw ValidationError("diagonal entry (" + std::to_string(i) + ", " +
                                  std::to_string(i) + ") must be zero");
        for (int j = i + 1; j < n; ++j) {
            const double w = entries[static_cast<std::size_t>(i) * n + j];
            const double wt = entries[static_cast<std::size_t>(j) * n + i];
            if (w != wt)
                throw ValidationError("matrix is not symmetric at (" + std::to_string(i) + ", " +
                                      std::to_string(j) + ")");
            if (w != 0.0) edges.push_back({i, j, w});
        }
    }
    return from_edges(n, std::move(edges));
}

double CouplingMatrix::at(int i, int j) const {
    check_site(i, n_, "row");
    check_site(j, n_, "column");
    if (i == j) return 0.0;
    if (has_dense()) return dense_[static_cast<std::size_t>(i) * n_ + j];
    const auto [a, b] = std::minmax(i, j);
    const auto it = std::lower_bound(
        edges_.begin(), edges_.end(), std::pair(a, b),
        [](const Edge& e, const std::pair<int, int>& key) { return std::pair<int, int>(e.i, e.j) < key; });
    if (it != edges_.end() && it->i == a && it->j == b) return it->w;
    return 0.0;
}

std::vector<std::vector<std::pair<int, double>>> adjacency(const CouplingMatrix& g) {
    std::vector<std::vector<std::pair<int, double>>> adj(g.n());
    for (const Edge& e : g.edges()) {
        adj[e.i].emplace_back(e.j, e.w);
        adj[e.j].emplace_back(e.i, e.w);
    }
    return adj;
}

const SplitEdge* SignSplit::find(int i, int j) const {
    const auto [a, b] = std::minmax(i, j);
    const auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair(a, b),
                                     [](const SplitEdge& e, const std::pair<int, int>& key) {
                                         return std::pair<int, int>(e.i, e.j) < key;
                                     });
    if (it != edges_.end() && it->i == a && it->j == b) return &*it;
    return nullptr;
}

double SignSplit::plus(int i, int j) const {
    check_site(i, n_, "row");
    check_site(j, n_, "column");
    if (i == j) return 0.0;
    const SplitEdge* e = find(i, j);
    return e ? e->plus : 0.0;
}

double SignSplit::minus(int i, int j) const {
    check_site(i, n_, "row");
    check_site(j, n_, "column");
    if (i == j) return 0.0;
    const SplitEdge* e = find(i, j);
    return e ? e->minus : 0.0;
}

SignSplit sign_split(const CouplingMatrix& g) {
    SignSplit s;
    s.n_ = g.n();
    s.edges_.reserve(g.edges().size());
    for (const Edge& e : g.edges())
        s.edges_.push_back({e.i, e.j, std::max(e.w, 0.0), std::max(-e.w, 0.0)});
    return s;
}

CouplingMatrix generate_sk(int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    const double sigma = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double w = sigma * rng::normal(seed, rng::Domain::sk, static_cast<std::uint64_t>(i),
                                                 static_cast<std::uint64_t>(j));
            if (w != 0.0) edges.push_back({i, j, w});
        }
    return CouplingMatrix::from_edges(n, std::move(edges));
}

CouplingMatrix generate_ea(const std::vector<int>& dims, Boundary boundary, std::uint64_t seed) {
    if (dims.empty()) throw std::invalid_argument("dims must be nonempty");
    long long n = 1;
    for (int d : dims) {
        if (d < 1) throw std::invalid_argument("lattice extents must be >= 1");
        n *= d;
        if (n > CouplingMatrix::kDenseCap * 1024LL)
            throw std::invalid_argument("lattice too large");
    }

    // strides of the row-major site index
    std::vector<long long> stride(dims.size());
    long long s = 1;
    for (std::size_t a = dims.size(); a-- > 0;) {
        stride[a] = s;
        s *= dims[a];
    }

    std::vector<Edge> edges;
    std::vector<int> coord(dims.size(), 0);
    for (long long site = 0; site < n; ++site) {
        for (std::size_t a = 0; a < dims.size(); ++a) {
            const int L = dims[a];
            if (coord[a] + 1 < L) {
                const int i = static_cast<int>(site);
                const int j = static_cast<int>(site + stride[a]);
                edges.push_back({i, j, rng::normal(seed, rng::Domain::ea, i, j)});
            } else if (boundary == Boundary::periodic && L > 2) {
                // wrap edge; L <= 2 would duplicate the in-lattice pair
                const int j = static_cast<int>(site);
                const int i = static_cast<int>(site - static_cast<long long>(L - 1) * stride[a]);
                edges.push_back({i, j, rng::normal(seed, rng::Domain::ea, i, j)});
            }
        }
        for (std::size_t a = dims.size(); a-- > 0;) {
            if (++coord[a] < dims[a]) break;
            coord[a] = 0;
        }
    }
    return CouplingMatrix::from_edges(static_cast<int>(n), std::move(edges));
}

CouplingMatrix hopfield_from_patterns(const std::vector<std::vector<int>>& patterns) {
    if (patterns.empty()) throw std::invalid_argument("at least one pattern required");
    const std::size_t n = patterns.front().size();
    if (n == 0) throw std::invalid_argument("patterns must be nonempty");
    for (const auto& xi : patterns) {
        if (xi.size() != n) throw std::invalid_argument("patterns must have equal length");
        for (int v : xi)
            if (v != 1 && v != -1) throw std::invalid_argument("pattern entries must be +-1");
    }

    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            long long acc = 0;  // exact integer overlap
            for (const auto& xi : patterns) acc += xi[i] * xi[j];
            if (acc != 0)
                edges.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(j),
                                 static_cast<double>(acc) / static_cast<double>(n)});
        }
    return CouplingMatrix::from_edges(static_cast<int>(n), std::move(edges));
}

CouplingMatrix generate_hopfield(int n, int p, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("n must be >= 1");
    if (p < 1) throw std::invalid_argument("p must be >= 1");
    std::vector<std::vector<int>> patterns(p, std::vector<int>(n));
    for (int mu = 0; mu < p; ++mu)
        for (int i = 0; i < n; ++i)
            patterns[mu][i] = (rng::counter_hash(seed, rng::Domain::hopfield, mu, i) & 1u) ? 1 : -1;
    return hopfield_from_patterns(patterns);
}

void ModelSpec::validate() const {
    switch (kind) {
        case ModelKind::sk:
            if (n < 1) throw std::invalid_argument("sk model requires n >= 1");
            break;
        case ModelKind::ea_lattice:
            if (dims.empty()) throw std::invalid_argument("ea model requires lattice dims");
            for (int d : dims)
                if (d < 1) throw std::invalid_argument("lattice extents must be >= 1");
            break;
        case ModelKind::hopfield:
            if (n < 1) throw std::invalid_argument("hopfield model requires n >= 1");
            if (patterns < 1) throw std::invalid_argument("hopfield model requires patterns >= 1");
            break;
        case ModelKind::file:
            if (path.empty()) throw std::invalid_argument("file model requires a path");
            break;
    }
}

int ModelSpec::sites() const {
    if (kind == ModelKind::ea_lattice) {
        long long prod = 1;
        for (int d : dims) prod *= d;
        return static_cast<int>(prod);
    }
    return n;
}

CouplingMatrix generate(const ModelSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case ModelKind::sk:
            return generate_sk(spec.n, spec.seed);
        case ModelKind::ea_lattice:
            return generate_ea(spec.dims, spec.boundary, spec.seed);
        case ModelKind::hopfield:
            return generate_hopfield(spec.n, spec.patterns, spec.seed);
        case ModelKind::file:
            return load_couplings_file(spec.path);
    }
    throw std::invalid_argument("unknown model kind");
}

namespace {

// strips '#' comments and surrounding whitespace; empty result means skip
std::string content_of(const std::string& raw) {
    std::string line = raw;
    if (const auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    const auto first = line.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = line.find_last_not_of(" \t\r\n");
    return line.substr(first, last - first + 1);
}

}  // namespace

CouplingMatrix load_couplings(std::istream& in) {
    std::string raw;
    long lineno = 0;
    long n = -1;
    std::vector<Edge> edges;

    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = content_of(raw);
        if (line.empty()) continue;

        std::istringstream ls(line);
        if (n < 0) {
            if (!(ls >> n) || !(ls >> std::ws).eof() || n < 1)
                throw ParseError("expected the number of spins (a positive integer)", lineno);
            continue;
        }

        long i = 0, j = 0;
        double v = 0.0;
        if (!(ls >> i >> j >> v) || !(ls >> std::ws).eof())
            throw ParseError("expected \"i j value\"", lineno);
        if (!std::isfinite(v)) throw ParseError("coupling value must be finite", lineno);
        if (i < 0 || i >= n || j < 0 || j >= n)
            throw ValidationError("line " + std::to_string(lineno) + ": site index out of range");
        if (i == j) {
            if (v != 0.0)
                throw ValidationError("line " + std::to_string(lineno) +
                                      ": nonzero diagonal entry (" + std::to_string(i) + ", " +
                                      std::to_string(j) + ")");
            continue;
        }
        const auto [a, b] = std::minmax(i, j);
        edges.push_back({static_cast<std::int32_t>(a), static_cast<std::int32_t>(b), v});
    }
    if (n < 0) throw ParseError("empty couplings stream", std::max(lineno, 1L));

    // collapse exact duplicates, reject conflicting (i,j)/(j,i) listings
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        return std::tuple(a.i, a.j, a.w) < std::tuple(b.i, b.j, b.w);
    });
    std::vector<Edge> unique;
    for (const Edge& e : edges) {
        if (!unique.empty() && unique.back().i == e.i && unique.back().j == e.j) {
            if (unique.back().w != e.w)
                throw ValidationError("conflicting values for pair (" + std::to_string(e.i) + ", " +
                                      std::to_string(e.j) + ")");
            continue;
        }
        unique.push_back(e);
    }
    return CouplingMatrix::from_edges(static_cast<int>(n), std::move(unique));
}

CouplingMatrix load_couplings_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open couplings file: " + path);
    return load_couplings(in);
}

void save_couplings(const CouplingMatrix& g, std::ostream& out) {
    out << g.n() << "\n";
    char buf[64];
    for (const Edge& e : g.edges()) {
        std::snprintf(buf, sizeof(buf), "%d %d %.17g\n", e.i, e.j, e.w);
        out << buf;
    }
}

void save_couplings_file(const CouplingMatrix& g, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open output file: " + path);
    save_couplings(g, out);
    if (!out) throw ValidationError("failed writing couplings file: " + path);
}

}  // namespace babylon
