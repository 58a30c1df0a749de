// Python bindings for the core operations: assembling sparse systems, the
// classical and learned preconditioners, the GMRES solver, and the
// desk-scale spectral helpers.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nilu/dataset.hpp"
#include "nilu/spectral.hpp"

namespace py = pybind11;
using namespace nilu;

namespace {

std::unique_ptr<Preconditioner> make_precond(const CsrMatrix& A, const std::string& kind,
                                             const std::string& model_path) {
    if (kind == "none") return std::make_unique<IdentityPreconditioner>();
    if (kind == "jacobi") return std::make_unique<JacobiPreconditioner>(A);
    if (kind == "ilu0") return std::make_unique<FactoredPreconditioner>(ilu0(A), "ilu0");
    if (kind == "learned") {
        const ModelParams m = load_model_json(model_path);
        return std::make_unique<FactoredPreconditioner>(forward(m, coates_graph(A)),
                                                        "learned");
    }
    throw std::invalid_argument("unknown preconditioner '" + kind + "'");
}

}  // namespace

PYBIND11_MODULE(_nilu, m) {
    m.doc() = "Learned and classical incomplete-LU preconditioners for GMRES";

    py::class_<CsrMatrix>(m, "CsrMatrix")
        .def_readonly("n", &CsrMatrix::n)
        .def_readonly("row_ptr", &CsrMatrix::row_ptr)
        .def_readonly("col_idx", &CsrMatrix::col_idx)
        .def_readonly("values", &CsrMatrix::values)
        .def("nnz", &CsrMatrix::nnz)
        .def("find", &CsrMatrix::find);

    py::class_<FactorPair>(m, "FactorPair")
        .def_readonly("L", &FactorPair::L)
        .def_readonly("U", &FactorPair::U)
        .def_readonly("epsilon", &FactorPair::epsilon);

    m.def("from_coo",
          [](const std::vector<std::tuple<int, int, double>>& triples, int n) {
              return csr_from_coo(triples, n);
          },
          py::arg("triples"), py::arg("n"));
    m.def("poisson2d", &poisson2d, py::arg("k"));
    m.def("perturbed_poisson2d",
          [](int k, std::uint64_t seed) {
              std::mt19937_64 rng(seed);
              return perturb(poisson2d(k), rng);
          },
          py::arg("k"), py::arg("seed"));
    m.def("spmv", &spmv, py::arg("A"), py::arg("x"));
    m.def("ilu0", [](const CsrMatrix& A) { return ilu0(A); }, py::arg("A"));
    m.def("learned_factors",
          [](const std::string& model_path, const CsrMatrix& A) {
              return forward(load_model_json(model_path), coates_graph(A));
          },
          py::arg("model_path"), py::arg("A"));

    m.def("gmres",
          [](const CsrMatrix& A, const Vec& b, const std::string& precond, double tol,
             const std::string& model_path) {
              const auto P = make_precond(A, precond, model_path);
              GmresOptions opts;
              opts.tol = tol;
              const SolveResult r = gmres(A, *P, b, Vec(A.n, 0.0), opts);
              py::dict out;
              out["x"] = r.x;
              out["iterations"] = r.iterations;
              out["converged"] = r.converged;
              out["residual_history"] = r.residual_history;
              return out;
          },
          py::arg("A"), py::arg("b"), py::arg("precond") = "none", py::arg("tol") = 1e-8,
          py::arg("model_path") = "");

    m.def("preconditioned_singular_values",
          [](const CsrMatrix& A, const std::string& precond, const std::string& model_path) {
              const auto P = make_precond(A, precond, model_path);
              return svd_values(precond_dense(A, *P));
          },
          py::arg("A"), py::arg("precond") = "none", py::arg("model_path") = "");

    m.def("generate_dataset",
          [](int grid, int n_train, int n_val, int n_test, std::uint64_t seed,
             const std::string& out) { save_dataset(make_dataset(grid, n_train, n_val, n_test, seed), out); },
          py::arg("grid"), py::arg("train"), py::arg("val"), py::arg("test"), py::arg("seed"),
          py::arg("out"));

    m.def("train_model",
          [](const std::string& data_dir, const std::string& loss, int epochs,
             std::uint64_t seed, const std::string& out_path) {
              const DatasetBundle ds = load_dataset(data_dir);
              TrainConfig cfg;
              cfg.epochs = epochs;
              cfg.seed = seed;
              if (loss == "max") cfg.loss = LossKind::max;
              else if (loss == "min") cfg.loss = LossKind::min;
              else if (loss == "min-hat") cfg.loss = LossKind::min_hat;
              else if (loss == "combined") cfg.loss = LossKind::combined;
              else throw std::invalid_argument("unknown loss '" + loss + "'");
              const ModelParams init =
                  init_model({}, cfg.eps, Aggregation::mean, cfg.seed);
              const TrainResult r = train(init, ds.train.samples, ds.val.samples, cfg);
              save_model_json(r.best, out_path);
              return r.best_epoch;
          },
          py::arg("data_dir"), py::arg("loss") = "max", py::arg("epochs") = 100,
          py::arg("seed") = 0, py::arg("out_path") = "model.json");
}
