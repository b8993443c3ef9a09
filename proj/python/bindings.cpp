#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "idmfit/estimation.hpp"
#include "idmfit/lifetable.hpp"
#include "idmfit/plugin.hpp"
#include "idmfit/simulator.hpp"

namespace py = pybind11;
using namespace idmfit;

namespace {

using Row = std::tuple<double, double, std::int64_t, std::int64_t>;

CurrentStatusTable table_from_rows(const std::vector<Row>& rows, std::optional<double> period) {
    std::vector<AggregatedCounts> groups;
    for (const auto& [lo, hi, n, c] : rows) groups.emplace_back(AgeInterval(lo, hi), n, c);
    return CurrentStatusTable(std::move(groups), period);
}

std::vector<Row> rows_of(const CurrentStatusTable& t) {
    std::vector<Row> rows;
    for (const auto& g : t.groups()) rows.emplace_back(g.interval.lo, g.interval.hi, g.n, g.c);
    return rows;
}

std::vector<std::string> messages(const Diagnostics& d) {
    std::vector<std::string> out;
    for (const auto& e : d.entries()) out.push_back(e.code + ": " + e.message);
    return out;
}

FitOptions options_with(int threads) {
    FitOptions o;
    o.threads = threads;
    return o;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Incidence estimation from aggregated current-status data";

    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

    py::class_<CurrentStatusTable>(m, "CurrentStatusTable")
        .def(py::init(&table_from_rows), py::arg("rows"), py::arg("period") = std::nullopt,
             "Rows of (age_lo, age_hi, n, c).")
        .def_property_readonly("rows", &rows_of)
        .def_property_readonly("period", &CurrentStatusTable::period)
        .def_property_readonly("midpoints", &CurrentStatusTable::midpoints)
        .def("__len__", &CurrentStatusTable::size)
        .def("__eq__", [](const CurrentStatusTable& a, const CurrentStatusTable& b) { return a == b; })
        .def("to_csv", [](const CurrentStatusTable& t) { return to_csv(t); });

    m.def("read_current_status_csv", &read_current_status_csv, py::arg("path"));
    m.def("parse_current_status_csv",
          [](const std::string& text) { return parse_current_status_csv(std::string_view(text)); },
          py::arg("text"));

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("estimates", &FitResult::estimates)
        .def_readonly("std_errors", &FitResult::std_errors)
        .def_property_readonly("covariance",
                               [](const FitResult& f) -> std::optional<Eigen::MatrixXd> { return f.covariance; })
        .def_property_readonly("ci95",
                               [](const FitResult& f) {
                                   std::vector<std::pair<double, double>> out;
                                   for (const auto& iv : f.ci95) out.emplace_back(iv.lo, iv.hi);
                                   return out;
                               })
        .def_readonly("max_loglik", &FitResult::max_loglik)
        .def_readonly("converged", &FitResult::converged)
        .def_readonly("iterations", &FitResult::iterations)
        .def_readonly("notes", &FitResult::notes)
        .def("confidence_intervals",
             [](const FitResult& f, double level) {
                 std::vector<std::pair<double, double>> out;
                 for (const auto& iv : f.confidence_intervals(level)) out.emplace_back(iv.lo, iv.hi);
                 return out;
             },
             py::arg("level"))
        .def("to_json", [](const FitResult& f) { return to_json(f); });

    m.def("expit", &expit);
    m.def("logit", &logit);
    m.def("prevalence_closed_form",
          [](double beta0, double beta1, double age, double a0, double p0) {
              return prevalence_closed_form({beta0, beta1}, InitialCondition(a0, p0), age);
          },
          py::arg("beta0"), py::arg("beta1"), py::arg("age"), py::arg("a0") = 20.0, py::arg("p0") = 0.0);
    m.def("lifetable_rates",
          [](const std::string& path) {
              const auto t = read_lifetable_csv(path);
              const auto m = lifetable_to_rate(t.general);
              const auto m1 = lifetable_to_rate(t.diseased);
              return py::dict(py::arg("breakpoints") = m.breakpoints(), py::arg("m") = m.values(),
                              py::arg("m1") = m1.values());
          },
          py::arg("path"), "Annual general (m) and diseased (m1) mortality on the life-table grid.");

    m.def("fit_nondifferential",
          [](const CurrentStatusTable& data, double a0, double p0, int threads) {
              return fit_nondifferential(data, InitialCondition(a0, p0), options_with(threads));
          },
          py::arg("data"), py::arg("a0") = 20.0, py::arg("p0") = 0.0, py::arg("threads") = 1);
    m.def("fit_differential",
          [](const CurrentStatusTable& data, const std::string& lifetable_path, double a0, double p0,
             int threads) {
              const auto t = read_lifetable_csv(lifetable_path);
              return fit_differential(data, lifetable_to_rate(t.diseased), lifetable_to_rate(t.general),
                                      InitialCondition(a0, p0), options_with(threads));
          },
          py::arg("data"), py::arg("lifetable_path"), py::arg("a0") = 20.0, py::arg("p0") = 0.0,
          py::arg("threads") = 1);
    m.def("fit_logit_linear",
          [](const CurrentStatusTable& data) {
              const auto line = fit_logit_linear(data);
              return std::make_tuple(line.beta0, line.beta1);
          },
          py::arg("data"));
    m.def("incidence_from_logit_fit", &incidence_from_logit_fit, py::arg("beta0"), py::arg("beta1"),
          py::arg("age"));
    m.def("incidence_curve",
          [](const FitResult& fit, const std::vector<double>& ages, double level) {
              std::vector<std::tuple<double, double, double, double>> out;
              for (const auto& pt : gompertz_incidence_curve(fit, ages, level))
                  out.emplace_back(pt.age, pt.incidence, pt.ci.lo, pt.ci.hi);
              return out;
          },
          py::arg("fit"), py::arg("ages"), py::arg("level") = 0.95);

    m.def("fit_prevalence_surface",
          [](const CurrentStatusTable& first, const CurrentStatusTable& second, double t_origin,
             int threads) { return fit_prevalence_surface(first, second, t_origin, options_with(threads)); },
          py::arg("first"), py::arg("second"), py::arg("t_origin") = 2009.0, py::arg("threads") = 1);
    m.def("plugin_incidence",
          [](double p, double dp, double mortality, double ratio) {
              return plugin_incidence(p, dp, mortality, ratio);
          },
          py::arg("p"), py::arg("dp"), py::arg("m"), py::arg("R"));
    m.def("plugin_curve",
          [](const FitResult& fit, const std::string& mortality_path, double t, double t_origin,
             const std::vector<double>& ages, double level) {
              const auto ctx = read_mortality_csv(mortality_path);
              Diagnostics diag;
              std::vector<std::tuple<double, double, double, double, bool>> out;
              for (double a : ages) {
                  const auto e = incidence_with_ci(fit, t_origin, t, a, ctx, level, &diag);
                  out.emplace_back(a, e.point, e.ci.lo, e.ci.hi, e.negative);
              }
              return py::make_tuple(out, messages(diag));
          },
          py::arg("fit"), py::arg("mortality_path"), py::arg("t"), py::arg("t_origin") = 2009.0,
          py::arg("ages"), py::arg("level") = 0.95);

    m.def("simulate",
          [](const std::string& scenario_json, std::optional<std::uint64_t> seed, bool expected) {
              auto s = scenario_from_json(scenario_json);
              if (seed) s.seed = *seed;
              s.validate();
              if (!expected) return simulate(s);
              return expected_current_status(exact_prevalence(s), s.groups, s.group_sizes, s.period);
          },
          py::arg("scenario_json"), py::arg("seed") = std::nullopt, py::arg("expected") = false);
}
