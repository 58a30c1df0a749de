#include "nilu/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "nilu/dense.hpp"

namespace nilu {

namespace {

constexpr std::uint64_t kSplitOffsetTrain = 0;
constexpr std::uint64_t kSplitOffsetVal = 1'000'000;
constexpr std::uint64_t kSplitOffsetTest = 2'000'000;

bool is_nonsingular(const CsrMatrix& A) {
    // Desk-scale dense rank check; beyond the dense cap fall back to a pilot solve.
    if (A.n <= 2000) {
        const DenseLu f = dense_lu(to_dense(A));
        if (f.singular) return false;
        double max_piv = 0.0, min_piv = std::numeric_limits<double>::infinity();
        for (int i = 0; i < A.n; ++i) {
            const double p = std::abs(f.lu(i, i));
            max_piv = std::max(max_piv, p);
            min_piv = std::min(min_piv, p);
        }
        return min_piv > 1e-12 * max_piv;
    }
    try {
        FactoredPreconditioner P(ilu0(A), "ilu0");
        GmresOptions opts;
        opts.tol = 1e-8;
        const SolveResult r = gmres(A, P, Vec(A.n, 1.0), Vec(A.n, 0.0), opts);
        return r.converged;
    } catch (const std::exception&) {
        return false;
    }
}

}  // namespace

CsrMatrix poisson2d(int k) {
    if (k < 2) throw std::invalid_argument("poisson2d: grid side must be >= 2");
    const int n = k * k;
    std::vector<CooTriple> triples;
    triples.reserve(static_cast<size_t>(5) * n);
    auto idx = [k](int r, int c) { return r * k + c; };
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) {
            const int i = idx(r, c);
            triples.emplace_back(i, i, 4.0);
            if (r > 0) triples.emplace_back(i, idx(r - 1, c), -1.0);
            if (r < k - 1) triples.emplace_back(i, idx(r + 1, c), -1.0);
            if (c > 0) triples.emplace_back(i, idx(r, c - 1), -1.0);
            if (c < k - 1) triples.emplace_back(i, idx(r, c + 1), -1.0);
        }
    return csr_from_coo(std::move(triples), n);
}

CsrMatrix perturb(const CsrMatrix& A, std::mt19937_64& rng, int max_attempts) {
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        CsrMatrix B = A;
        for (size_t k = 0; k < B.values.size(); ++k)
            if (B.values[k] != 0.0) B.values[k] += noise(rng);
        if (is_nonsingular(B)) return B;
    }
    throw GenerationError("perturb: no nonsingular draw within attempt budget");
}

Vec rhs_source(int k) {
    if (k < 1) throw std::invalid_argument("rhs_source: grid side must be >= 1");
    const double pi = std::acos(-1.0);
    const double h = 1.0 / (k + 1);
    Vec b(static_cast<size_t>(k) * k);
    for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c)
            b[static_cast<size_t>(r) * k + c] =
                std::sin(pi * (r + 1) * h) * std::sin(pi * (c + 1) * h);
    return b;
}

TrainSample supervised_sample(const CsrMatrix& A, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ULL);
    std::normal_distribution<double> dist(0.0, 1.0);
    TrainSample s;
    s.A = A;
    s.seed = seed;
    s.b.resize(A.n);
    for (double& x : s.b) x = dist(rng);

    FactoredPreconditioner P(ilu0(A), "ilu0");
    GmresOptions opts;
    opts.tol = 1e-10;
    SolveResult r = gmres(A, P, s.b, Vec(A.n, 0.0), opts);
    // one correction pass in case the Givens residual estimate drifted
    Vec res = s.b;
    axpy(-1.0, spmv(A, r.x), res);
    if (norm2(res) / norm2(s.b) >= 1e-10) r = gmres(A, P, s.b, r.x, opts);

    res = s.b;
    axpy(-1.0, spmv(A, r.x), res);
    const double rel = norm2(res) / norm2(s.b);
    if (rel >= 1e-10)
        throw GenerationError("supervised_sample: offline solve stalled at relative residual " +
                              std::to_string(rel));
    s.x = std::move(r.x);
    s.has_solution = true;
    return s;
}

DatasetBundle make_dataset(int grid_k, int n_train, int n_val, int n_test,
                           std::uint64_t seed_base) {
    if (n_train < 1 || n_val < 1 || n_test < 1)
        throw std::invalid_argument("make_dataset: counts must be >= 1");
    const CsrMatrix base = poisson2d(grid_k);

    auto generate = [&](const std::string& split, std::uint64_t offset, int count,
                        bool supervised) {
        ProblemSet set;
        set.split = split;
        set.grid_k = grid_k;
        set.seed_base = seed_base;
        for (int i = 0; i < count; ++i) {
            const std::uint64_t seed = seed_base + offset + static_cast<std::uint64_t>(i);
            std::mt19937_64 rng(seed);
            const CsrMatrix A = perturb(base, rng);
            if (supervised) {
                set.samples.push_back(supervised_sample(A, seed));
            } else {
                TrainSample s;
                s.A = A;
                s.b = rhs_source(grid_k);
                s.seed = seed;
                set.samples.push_back(std::move(s));
            }
        }
        return set;
    };

    DatasetBundle ds;
    ds.train = generate("train", kSplitOffsetTrain, n_train, true);
    ds.val = generate("val", kSplitOffsetVal, n_val, true);
    ds.test = generate("test", kSplitOffsetTest, n_test, false);
    return ds;
}

namespace {

std::string sample_prefix(const std::string& dir, const std::string& split, int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%03d", i);
    return dir + "/" + split + "_" + buf;
}

void save_split(const ProblemSet& set, const std::string& dir, nlohmann::json& manifest) {
    nlohmann::json js;
    js["count"] = set.samples.size();
    nlohmann::json seeds = nlohmann::json::array();
    for (size_t i = 0; i < set.samples.size(); ++i) {
        const TrainSample& s = set.samples[i];
        seeds.push_back(s.seed);
        const std::string prefix = sample_prefix(dir, set.split, static_cast<int>(i));
        write_matrix_market(s.A, prefix + ".A.mtx");
        write_vector(s.b, prefix + ".b.vec");
        if (s.has_solution) write_vector(s.x, prefix + ".x.vec");
    }
    js["seeds"] = std::move(seeds);
    manifest["splits"][set.split] = std::move(js);
}

ProblemSet load_split(const std::string& split, const std::string& dir,
                      const nlohmann::json& manifest) {
    const auto& js = manifest.at("splits").at(split);
    ProblemSet set;
    set.split = split;
    set.grid_k = manifest.at("grid_k");
    set.seed_base = manifest.at("seed_base");
    const int count = js.at("count");
    for (int i = 0; i < count; ++i) {
        const std::string prefix = sample_prefix(dir, split, i);
        TrainSample s;
        s.A = read_matrix_market(prefix + ".A.mtx");
        s.b = read_vector(prefix + ".b.vec");
        s.seed = js.at("seeds").at(i);
        if (std::filesystem::exists(prefix + ".x.vec")) {
            s.x = read_vector(prefix + ".x.vec");
            s.has_solution = true;
        }
        set.samples.push_back(std::move(s));
    }
    return set;
}

}  // namespace

void save_dataset(const DatasetBundle& ds, const std::string& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["format_version"] = 1;
    manifest["grid_k"] = ds.train.grid_k;
    manifest["seed_base"] = ds.train.seed_base;
    save_split(ds.train, dir, manifest);
    save_split(ds.val, dir, manifest);
    save_split(ds.test, dir, manifest);
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw std::runtime_error("save_dataset: cannot open manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

DatasetBundle load_dataset(const std::string& dir) {
    std::ifstream in(dir + "/manifest.json");
    if (!in) throw std::runtime_error("load_dataset: cannot open manifest in " + dir);
    nlohmann::json manifest;
    in >> manifest;
    if (manifest.at("format_version").get<int>() != 1)
        throw std::runtime_error("load_dataset: unsupported manifest version");
    DatasetBundle ds;
    ds.train = load_split("train", dir, manifest);
    ds.val = load_split("val", dir, manifest);
    ds.test = load_split("test", dir, manifest);
    return ds;
}

}  // namespace nilu
