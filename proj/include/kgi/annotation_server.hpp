#pragma once

// HTTP/JSON front of the annotation store.
//
//   POST /tasks                      batch create (JSON array of tasks)
//   GET  /tasks/next?annotator=ID    next task payload, 204 when none left
//   POST /judgments                  {"task_id", "annotator", "grade"}
//   GET  /labels?protocol=P[&include_discarded=1]   JSONL
//   GET  /progress                   counts by protocol and status

#include <map>
#include <memory>
#include <string>

#include "kgi/annotation.hpp"

namespace httplib {
class Server;
}

namespace kgi {

struct HttpResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

class AnnotationServer {
public:
    explicit AnnotationServer(AnnotationStore& store);
    ~AnnotationServer();

    // Transport-free dispatch; the socket handlers forward here.
    HttpResponse route(const std::string& method, const std::string& path,
                       const std::map<std::string, std::string>& params, const std::string& body);

    // Binds and serves until stop(). port 0 picks a free port; returns the
    // bound port, or -1 on bind failure.
    int bind(const std::string& host, int port);
    void serve();
    void stop();

private:
    AnnotationStore& store_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace kgi
