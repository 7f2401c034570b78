#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cellvote/annotation.hpp"
#include "cellvote/error.hpp"
#include "cellvote/metrics.hpp"
#include "cellvote/records.hpp"
#include "cellvote/report.hpp"
#include "cellvote/segmentation.hpp"
#include "cellvote/simulator.hpp"

namespace py = pybind11;
using namespace cellvote;

namespace {

Ballot ballot_from(const std::vector<std::string>& labels, int k) {
  Ballot b("item", k);
  for (std::size_t i = 0; i < labels.size(); ++i)
    b.add(Vote{"w" + std::to_string(i), "item", parse_cell_class(labels[i]), 0});
  return b;
}

py::dict result_dict(const ConsensusResult& r) {
  py::dict d;
  d["item_id"] = r.item_id;
  d["label"] = r.outcome ? py::object(py::str(std::string(to_string(r.outcome->label)))) : py::none();
  d["agreement"] = r.outcome ? r.outcome->agreement : 0;
  d["pattern"] = r.pattern.to_string();
  return d;
}

metrics::ConfusionMatrix matrix_from(const std::vector<std::vector<std::int64_t>>& rows,
                                     const std::vector<std::int64_t>& na) {
  const std::size_t n = rows.size();
  std::vector<std::int64_t> flat;
  for (const auto& r : rows) {
    if (r.size() != n) throw Error(ErrorKind::InvalidArgument, "matrix must be square");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return metrics::ConfusionMatrix(n, std::move(flat), na);
}

py::dict report_dict(const metrics::MetricsReport& m) {
  py::dict d;
  d["per_class_accuracy"] = m.per_class_accuracy;
  d["accuracy"] = m.overall_accuracy;
  d["f_macro"] = m.f_macro;
  d["f_weighted"] = m.f_weighted;
  d["sds"] = m.sds;
  d["cba"] = m.cba;
  d["mcc"] = m.mcc;
  d["na_rate"] = m.na_rate;
  return d;
}

metrics::NaPolicy policy(const std::string& s) {
  if (s == "exclude") return metrics::NaPolicy::Exclude;
  if (s == "error") return metrics::NaPolicy::CountAsError;
  throw Error(ErrorKind::InvalidArgument, "na must be 'exclude' or 'error'");
}

}  // namespace

PYBIND11_MODULE(_cellvote, m) {
  m.doc() = "Consensus labelling, agreement metrics, simulation and Chan-Vese segmentation";

  // Raised for every library error; .kind names the ErrorKind.
  static PyObject* error_type = py::exception<Error>(m, "CellvoteError", PyExc_ValueError).release().ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error_type)(e.what());
      inst.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(error_type, inst.ptr());
    }
  });

  m.def("estimate_consensus_accuracy", &estimate_consensus_accuracy, py::arg("alpha"), py::arg("k") = 5,
        py::arg("quorum") = 3, "P(at least quorum of k independent votes are correct)");

  m.def(
      "aggregate",
      [](const std::vector<std::string>& labels, int k, int quorum) {
        return result_dict(aggregate(ballot_from(labels, k), quorum));
      },
      py::arg("labels"), py::arg("k") = 5, py::arg("quorum") = 3);
  m.def(
      "classify_pattern",
      [](const std::vector<std::string>& labels, int k) { return classify_pattern(ballot_from(labels, k)).counts; },
      py::arg("labels"), py::arg("k") = 5);
  m.def("merge_label", [](const std::string& label) { return std::string(to_string(merge_label(parse_cell_class(label)))); });

  m.def(
      "aggregate_votes_file",
      [](const std::filesystem::path& path, int k, int quorum) {
        const auto votes = read_votes_file(path.string());
        const auto agg = report::aggregate_votes(votes, k, quorum);
        py::dict hist;
        for (const auto& [name, count] : agg.histogram.summary()) hist[py::str(name)] = count;
        py::list results;
        for (const auto& r : agg.results) results.append(result_dict(r));
        py::dict d;
        d["votes"] = agg.vote_count;
        d["histogram"] = hist;
        d["incomplete"] = agg.histogram.incomplete;
        d["warnings"] = agg.warnings;
        d["results"] = results;
        return d;
      },
      py::arg("path"), py::arg("k") = 5, py::arg("quorum") = 3);

  // Metrics take the matrix as nested lists, rows = ground truth.
  m.def(
      "metrics_report",
      [](const std::vector<std::vector<std::int64_t>>& rows, const std::vector<std::int64_t>& na, const std::string& na_policy) {
        const auto r = metrics::full_report(matrix_from(rows, na), policy(na_policy));
        py::dict d;
        d["three_class"] = report_dict(r.three_class);
        d["two_class"] = report_dict(r.two_class);
        return d;
      },
      py::arg("matrix"), py::arg("na") = std::vector<std::int64_t>{}, py::arg("na_policy") = "exclude");
  m.def(
      "merge_matrix",
      [](const std::vector<std::vector<std::int64_t>>& rows) {
        const auto mm = metrics::merge_matrix(matrix_from(rows, {}));
        std::vector<std::vector<std::int64_t>> out(2, std::vector<std::int64_t>(2));
        for (std::size_t t = 0; t < 2; ++t)
          for (std::size_t p = 0; p < 2; ++p) out[t][p] = mm.at(t, p);
        return out;
      },
      py::arg("matrix"));

  m.def(
      "simulate_consensus_accuracy",
      [](double alpha, double rho, int items, std::uint64_t seed, int k, int quorum) {
        const auto e = sim::simulate_consensus_accuracy(alpha, rho, items, seed, k, quorum);
        return py::make_tuple(e.accuracy, e.standard_error);
      },
      py::arg("alpha"), py::arg("rho"), py::arg("items"), py::arg("seed") = 2024, py::arg("k") = 5, py::arg("quorum") = 3);
  m.def("expected_consensus_accuracy", &sim::expected_consensus_accuracy, py::arg("alpha"), py::arg("rho"),
        py::arg("k") = 5, py::arg("quorum") = 3);
  m.def(
      "calibrate_correlation",
      [](double target, double alpha, int items, std::uint64_t seed) {
        sim::CalibrationOptions opt;
        opt.items = items;
        opt.seed = seed;
        const auto c = sim::calibrate_correlation(target, alpha, opt);
        py::dict d;
        d["rho"] = c.rho;
        d["achieved"] = c.achieved;
        d["standard_error"] = c.standard_error;
        d["ci"] = py::make_tuple(c.ci_low, c.ci_high);
        return d;
      },
      py::arg("target"), py::arg("alpha"), py::arg("items") = 100'000, py::arg("seed") = 2024);

  m.def(
      "chan_vese",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> image, double mu, int max_iter, double tol) {
        if (image.ndim() != 2) throw Error(ErrorKind::InvalidArgument, "image must be 2-D");
        const int h = static_cast<int>(image.shape(0)), w = static_cast<int>(image.shape(1));
        std::vector<double> pixels(image.data(), image.data() + image.size());
        seg::ChanVeseParams params;
        params.mu = mu;
        params.max_iter = max_iter;
        params.tol = tol;
        seg::ChanVeseResult r;
        {
          py::gil_scoped_release release;
          r = seg::chan_vese(seg::GrayImage(w, h, std::move(pixels)), params);
        }
        py::array_t<bool> mask({h, w});
        auto out = mask.mutable_unchecked<2>();
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) out(y, x) = r.mask.at(x, y);
        py::dict d;
        d["mask"] = mask;
        d["iterations"] = r.state.iteration;
        d["converged"] = r.converged;
        d["energy"] = r.energy_history;
        return d;
      },
      py::arg("image"), py::arg("mu") = 0.2, py::arg("max_iter") = 1000, py::arg("tol") = 1e-4);
}
