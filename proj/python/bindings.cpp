#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "reenact/analytics.hpp"
#include "reenact/persistence.hpp"
#include "reenact/playback.hpp"
#include "reenact/script.hpp"
#include "reenact/session.hpp"

namespace py = pybind11;
using namespace reenact;
using nlohmann::json;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& obj) {
  return json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

std::vector<Vec2> points(const std::vector<std::pair<double, double>>& xy) {
  std::vector<Vec2> out;
  out.reserve(xy.size());
  for (const auto& [x, y] : xy) out.emplace_back(x, y);
  return out;
}

TraceFormat trace_format(const std::string& name) {
  if (name == "rows") return TraceFormat::rows;
  if (name == "structured") return TraceFormat::structured;
  throw Error(ErrorCode::InvalidArgument, "format must be 'rows' or 'structured'");
}

/// In-process session; each client's events queue up until drained.
class LocalSession {
 public:
  explicit LocalSession(Project project) : session_("local", std::move(project)) {}

  service::ClientId connect() {
    auto queue = std::make_shared<std::deque<json>>();
    const service::ClientId id = session_.connect([queue](const service::Event& e) { queue->push_back(e.to_json()); });
    queues_[id] = queue;
    return id;
  }

  void disconnect(service::ClientId client) {
    session_.disconnect(client);
    queues_.erase(client);
  }

  void handle(service::ClientId client, const py::object& command) { session_.handle(client, from_py(command)); }

  py::list events(service::ClientId client) {
    auto it = queues_.find(client);
    if (it == queues_.end()) throw Error(ErrorCode::InvalidArgument, "unknown client");
    py::list out;
    while (!it->second->empty()) {
      out.append(to_py(it->second->front()));
      it->second->pop_front();
    }
    return out;
  }

  bool advance() { return session_.advance(); }
  py::object info() const { return to_py(session_.info().to_json()); }
  Project project() const { return *session_.snapshot(); }

 private:
  service::Session session_;
  std::map<service::ClientId, std::shared_ptr<std::deque<json>>> queues_;
};

}  // namespace

PYBIND11_MODULE(_reenact, m) {
  m.doc() = "Deterministic animation sequencing for crime-scene reconstruction";

  static PyObject* error = PyErr_NewException("reenact._reenact.ReenactError", PyExc_RuntimeError, nullptr);
  m.attr("ReenactError") = py::handle(error);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error)(std::string(to_string(e.code())) + ": " + e.what());
      exc.attr("code") = std::string(to_string(e.code()));
      exc.attr("constraint") = e.constraint();
      if (const auto* s = dynamic_cast<const script::ScriptError*>(&e)) {
        exc.attr("line") = s->location().line;
        exc.attr("column") = s->location().column;
      }
      PyErr_SetObject(error, exc.ptr());
    }
  });

  py::class_<Project>(m, "Project")
      .def(py::init<>())
      .def_static("load", [](const std::string& bytes) { return load_project(bytes); }, py::arg("text"))
      .def_static("load_file", [](const std::string& path) { return load_project_file(path); }, py::arg("path"))
      .def_static("from_script", [](const std::string& text) { return parse_scenario(text); },
                  py::arg("text"))
      .def_static("from_dict", [](const py::object& doc) { return project_from_json(from_py(doc)); }, py::arg("doc"))
      .def("save", [](const Project& p) { return save_project(p); })
      .def("save_file", [](const Project& p, const std::string& path) { save_project_file(p, path); },
           py::arg("path"))
      .def("to_dict", [](const Project& p) { return to_py(project_to_json(p)); })
      .def("validate",
           [](const Project& p) {
             py::list out;
             for (const auto& v : validate(p)) {
               py::dict d;
               d["code"] = std::string(to_string(v.code));
               d["constraint"] = v.constraint;
               d["message"] = v.message;
               out.append(d);
             }
             return out;
           })
      .def_property_readonly("duration", [](const Project& p) { return p.timeline.duration(); })
      .def_property_readonly("frame_rate", [](const Project& p) { return p.timeline.frame_rate(); })
      .def_property_readonly("object_ids",
                             [](const Project& p) {
                               std::vector<std::string> ids;
                               for (const auto& o : p.scene.objects()) ids.push_back(o.id);
                               return ids;
                             })
      .def(
          "state_at", [](const Project& p, Frame frame) { return to_py(state_to_json(state_at(p, frame))); },
          py::arg("frame"))
      .def(
          "trace",
          [](const Project& p, Frame from, std::optional<Frame> to, Frame stride, const std::string& format) {
            const TraceFormat f = trace_format(format);
            return write_trace(export_trace(p, from, to.value_or(p.timeline.duration()), stride), f);
          },
          py::arg("start") = 0, py::arg("end") = py::none(), py::arg("stride") = 1, py::arg("format") = "rows")
      .def(
          "closest_approach",
          [](const Project& p, const std::string& a, const std::string& b) {
            const auto states = export_trace(p, 0, p.timeline.duration());
            const Approach c = closest_approach(path_of(states, a), path_of(states, b));
            return py::make_tuple(c.distance, c.frame);
          },
          py::arg("a"), py::arg("b"));

  m.def(
      "canonical_script", [](const std::string& text) { return script::print(script::parse(text)); },
      py::arg("text"), "Parses a scenario script and prints it in canonical form.");

  m.def(
      "path_compare",
      [](const std::vector<std::pair<double, double>>& candidate,
         const std::vector<std::pair<double, double>>& reference) {
        const PathComparison c = path_compare(points(candidate), points(reference));
        py::dict d;
        d["mean"] = c.mean;
        d["max"] = c.max;
        d["frechet"] = c.frechet;
        return d;
      },
      py::arg("candidate"), py::arg("reference"));

  m.def(
      "discrete_frechet",
      [](const std::vector<std::pair<double, double>>& a, const std::vector<std::pair<double, double>>& b) {
        return discrete_frechet(points(a), points(b));
      },
      py::arg("a"), py::arg("b"));

  py::class_<LocalSession>(m, "Session")
      .def(py::init([](std::optional<Project> p) { return std::make_unique<LocalSession>(p.value_or(Project())); }),
           py::arg("project") = py::none())
      .def("connect", &LocalSession::connect)
      .def("disconnect", &LocalSession::disconnect, py::arg("client"))
      .def("handle", &LocalSession::handle, py::arg("client"), py::arg("command"))
      .def("events", &LocalSession::events, py::arg("client"), "Drains the events delivered to a client.")
      .def("advance", &LocalSession::advance)
      .def("info", &LocalSession::info)
      .def_property_readonly("project", &LocalSession::project);
}
