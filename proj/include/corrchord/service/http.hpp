#pragma once

// HTTP/JSON routes over Service. Errors come back as {"error": message} with
// 400 (bad request data), 404 (unknown resource), 409 (conflict or finest
// level), 410 (stale edge) or 422 (degenerate input).

#include <functional>
#include <string>

#include <httplib.h>

#include "corrchord/service/service.hpp"

namespace corrchord {

namespace detail {

inline void send_json(httplib::Response& res, const Json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
}

inline Json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    try {
        auto j = Json::parse(req.body);
        if (!j.is_object()) throw DataError("request body must be a JSON object");
        return j;
    } catch (const Json::parse_error& e) {
        throw DataError(std::string("malformed JSON: ") + e.what());
    }
}

/// Runs a handler and maps library exceptions to HTTP status codes.
inline void guarded(httplib::Response& res, const std::function<void()>& fn) {
    const auto fail = [&](int status, const char* what) { send_json(res, Json{{"error", what}, {"status", status}}, status); };
    try {
        fn();
    } catch (const NotFoundError& e) {
        fail(404, e.what());
    } catch (const GoneError& e) {
        fail(410, e.what());
    } catch (const ConflictError& e) {
        fail(409, e.what());
    } catch (const FinestLevelError& e) {
        fail(409, e.what());
    } catch (const DegenerateError& e) {
        fail(422, e.what());
    } catch (const DataError& e) {
        fail(400, e.what());
    } catch (const RangeError& e) {
        fail(400, e.what());
    } catch (const Json::exception& e) {
        fail(400, e.what());
    } catch (const std::out_of_range& e) {
        fail(400, e.what());
    } catch (const std::exception& e) {
        fail(500, e.what());
    }
}

} // namespace detail

/// Registers every API route of `svc` on `server`.
inline void register_routes(httplib::Server& server, Service& svc) {
    using detail::guarded;
    using detail::parse_body;
    using detail::send_json;
    using Req = const httplib::Request&;
    using Res = httplib::Response&;

    server.Post("/datasets", [&](Req req, Res res) { guarded(res, [&] { send_json(res, svc.open_dataset(parse_body(req)), 201); }); });
    server.Get(R"(/datasets/([^/]+))", [&](Req req, Res res) { guarded(res, [&] { send_json(res, svc.dataset_json(req.matches[1])); }); });
    server.Post("/sessions", [&](Req req, Res res) { guarded(res, [&] { send_json(res, svc.create_session(parse_body(req)), 201); }); });
    server.Get(R"(/sessions/([^/]+))", [&](Req req, Res res) { guarded(res, [&] { send_json(res, svc.session_json(req.matches[1])); }); });
    server.Post(R"(/sessions/([^/]+)/context)", [&](Req req, Res res) {
        guarded(res, [&] { send_json(res, svc.compute_context(req.matches[1], parse_body(req)), 202); });
    });
    server.Post(R"(/sessions/([^/]+)/focus)", [&](Req req, Res res) {
        guarded(res, [&] { send_json(res, svc.refine_focus(req.matches[1], parse_body(req)), 202); });
    });
    server.Post(R"(/sessions/([^/]+)/back)", [&](Req req, Res res) {
        guarded(res, [&] {
            const auto body = parse_body(req);
            send_json(res, svc.navigate_back(req.matches[1], body.value("levels", 1)));
        });
    });
    server.Post(R"(/sessions/([^/]+)/filters)", [&](Req req, Res res) {
        guarded(res, [&] { send_json(res, svc.set_filters(req.matches[1], parse_body(req))); });
    });
    server.Get(R"(/sessions/([^/]+)/diagram)", [&](Req req, Res res) { guarded(res, [&] { send_json(res, svc.diagram(req.matches[1])); }); });
    server.Get(R"(/sessions/([^/]+)/edges/([^/]+))", [&](Req req, Res res) {
        guarded(res, [&] { send_json(res, svc.edge_detail(req.matches[1], req.matches[2])); });
    });
    server.Post(R"(/sessions/([^/]+)/matrix)", [&](Req req, Res res) {
        guarded(res, [&] { send_json(res, svc.compute_matrix(req.matches[1], parse_body(req)), 202); });
    });
    server.Get(R"(/sessions/([^/]+)/matrix)", [&](Req req, Res res) { guarded(res, [&] { send_json(res, svc.matrix(req.matches[1])); }); });
    server.Get(R"(/jobs/([^/]+))", [&](Req req, Res res) { guarded(res, [&] { send_json(res, svc.job_json(req.matches[1])); }); });
    server.Get(R"(/jobs/([^/]+)/diagram)", [&](Req req, Res res) { guarded(res, [&] { send_json(res, svc.job_partial(req.matches[1])); }); });
    server.Post(R"(/jobs/([^/]+)/cancel)", [&](Req req, Res res) { guarded(res, [&] { send_json(res, svc.cancel_job(req.matches[1])); }); });
}

} // namespace corrchord
