#include "kgi/annotation_server.hpp"

#include "httplib.h"
#include "kgi/error.hpp"

namespace kgi {

using nlohmann::json;

namespace {

HttpResponse json_response(int status, const json& body) { return {status, body.dump(), "application/json"}; }

HttpResponse error_response(int status, const Error& e) {
    return json_response(status, json{{"error", e.kind()}, {"message", e.what()}});
}

json label_status_json(const AggregatedLabel& label) {
    json j{{"task_id", label.task_id},
           {"status", label_status_name(label.status)},
           {"judgments", label.judgments},
           {"value", label.value ? json(*label.value) : json(nullptr)}};
    if (label.majority) j["class"] = grade_name(*label.majority);
    return j;
}

json parse_body(const std::string& body) {
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("request body is not valid JSON: ") + e.what());
    }
}

}  // namespace

AnnotationServer::AnnotationServer(AnnotationStore& store) : store_(store) {}

AnnotationServer::~AnnotationServer() { stop(); }

HttpResponse AnnotationServer::route(const std::string& method, const std::string& path,
                                     const std::map<std::string, std::string>& params, const std::string& body) {
    try {
        if (method == "POST" && path == "/tasks") {
            const json j = parse_body(body);
            if (!j.is_array()) throw ValidationError("POST /tasks expects a JSON array");
            std::vector<AnnotationTask> tasks;
            tasks.reserve(j.size());
            for (const json& t : j) tasks.push_back(task_from_json(t));
            const std::size_t created = store_.create_tasks(tasks);
            return json_response(201, json{{"created", created}});
        }
        if (method == "GET" && path == "/tasks/next") {
            const auto it = params.find("annotator");
            if (it == params.end() || it->second.empty()) throw ValidationError("annotator parameter required");
            const auto task = store_.next_task(it->second);
            if (!task) return {204, "", "application/json"};
            return json_response(200, task_payload(*task));
        }
        if (method == "POST" && path == "/judgments") {
            const Judgment j = judgment_from_json(parse_body(body));
            return json_response(200, label_status_json(store_.submit_judgment(j.task_id, j.annotator_id, j.grade)));
        }
        if (method == "GET" && path == "/labels") {
            const auto it = params.find("protocol");
            const auto protocol = it == params.end() ? std::nullopt : parse_protocol(it->second);
            if (!protocol) throw ValidationError("protocol must be a_benchmark or golden");
            const auto flag = params.find("include_discarded");
            const bool discarded = flag != params.end() && (flag->second == "1" || flag->second == "true");
            std::string out;
            for (const json& label : store_.export_labels(*protocol, discarded)) out += label.dump() + "\n";
            return {200, std::move(out), "application/x-ndjson"};
        }
        if (method == "GET" && path == "/progress") {
            const Progress p = store_.progress();
            return json_response(200, json{{"tasks", p.tasks}, {"judgments", p.judgments}, {"by_protocol", p.by_protocol}});
        }
        return json_response(404, json{{"error", "not_found"}, {"message", "no route for " + method + " " + path}});
    } catch (const NotFoundError& e) {
        return error_response(404, e);
    } catch (const ConflictError& e) {
        return error_response(409, e);
    } catch (const Error& e) {
        return error_response(400, e);
    }
}

int AnnotationServer::bind(const std::string& host, int port) {
    server_ = std::make_unique<httplib::Server>();
    auto forward = [this](const httplib::Request& req, httplib::Response& res) {
        std::map<std::string, std::string> params;
        for (const auto& [k, v] : req.params) params.emplace(k, v);
        const HttpResponse r = route(req.method, req.path, params, req.body);
        res.status = r.status;
        if (!r.body.empty()) res.set_content(r.body, r.content_type);
    };
    server_->Get("/tasks/next", forward);
    server_->Get("/labels", forward);
    server_->Get("/progress", forward);
    server_->Post("/tasks", forward);
    server_->Post("/judgments", forward);
    if (port == 0) return server_->bind_to_any_port(host);
    return server_->bind_to_port(host, port) ? port : -1;
}

void AnnotationServer::serve() {
    if (server_) server_->listen_after_bind();
}

void AnnotationServer::stop() {
    if (server_) server_->stop();
}

}  // namespace kgi
