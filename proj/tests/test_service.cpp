#include <thread>

#include "doctest.h"
#include "httplib.h"
#include "support.hpp"
#include "unistore/seed.hpp"
#include "unistore/server.hpp"
#include "unistore/service.hpp"

using namespace unistore;
using namespace testkit;

namespace {

struct Api {
  Engine engine;
  Service service{engine};
  std::string token;

  Api() {
    const ApiResponse r = call("POST", "/sessions", {{"login", "admin"}, {"password", "admin"}}, false);
    REQUIRE(r.status == 200);
    token = r.body.at("session_id");
  }

  ApiResponse call(const std::string& method, const std::string& path, const json& body = json(), bool auth = true,
                   std::map<std::string, std::string> query = {}) {
    ApiRequest r;
    r.method = method;
    r.path = path;
    r.query = std::move(query);
    r.body = body.is_null() ? std::string() : body.dump();
    if (auth) r.token = token;
    return service.handle(r);
  }

  ApiResponse event(const std::string& kind, const json& payload) {
    return call("POST", "/events", {{"kind", kind}, {"payload", payload}});
  }
};

}  // namespace

TEST_CASE("sessions open, authenticate and close") {
  Api api;
  CHECK(api.call("POST", "/sessions", {{"login", "admin"}, {"password", "nope"}}, false).status == 401);
  const ApiResponse anon = api.call("GET", "/concepts", json(), false);
  CHECK(anon.status == 401);
  CHECK(anon.body.at("code") == "AUTH_FAILED");
  CHECK(api.call("GET", "/concepts").status == 200);
  CHECK(api.call("DELETE", "/sessions/" + api.token).status == 200);
  CHECK(api.call("GET", "/concepts").status != 200);
}

TEST_CASE("events, objects and queries go through the dispatcher") {
  Api api;
  REQUIRE(api.call("POST", "/concepts", person_definition()).status == 201);
  const ApiResponse a = api.event("create", {{"concept", "Person"}, {"values", {{"name", "x"}, {"age", 1}}}});
  REQUIRE(a.status == 201);
  const ObjectId first = a.body.at("created").at(0);
  const StateIndex at_first = a.body.at("state");
  api.event("create", {{"concept", "Person"}, {"values", {{"name", "x"}, {"age", 2}}}});
  api.event("set_attr", {{"id", first}, {"values", {{"age", 5}}}});

  const ApiResponse now = api.call("GET", "/objects/" + std::to_string(first));
  CHECK(now.status == 200);
  CHECK(now.body.at("values").at("age") == 5);
  const ApiResponse then =
      api.call("GET", "/objects/" + std::to_string(first), json(), true, {{"state", std::to_string(at_first)}});
  CHECK(then.body.at("values").at("age") == 1);

  const ApiResponse listed = api.call("GET", "/objects", json(), true, {{"concept", "Person"}});
  CHECK(listed.status == 200);
  CHECK(listed.body.at("items").size() == 2);

  const ApiResponse ambiguous =
      api.call("POST", "/query", {{"formula", "name = 'x'"}, {"domain", "Person"}, {"mode", "individuate"}});
  CHECK(ambiguous.status == 409);
  CHECK(ambiguous.body.at("code") == "AMBIGUOUS");
  CHECK(ambiguous.body.at("details").at("count") == 2);
  const ApiResponse one =
      api.call("POST", "/query", {{"formula", "age = 5"}, {"domain", "Person"}, {"mode", "individuate"}});
  CHECK(one.status == 200);
  CHECK(one.body.at("id") == first);
  const ApiResponse none =
      api.call("POST", "/query", {{"formula", "age = 9"}, {"domain", "Person"}, {"mode", "individuate"}});
  CHECK(none.status == 404);
  const ApiResponse bad = api.call("POST", "/query", {{"formula", "name = "}, {"domain", "Person"}});
  CHECK(bad.status == 400);
  CHECK(bad.body.at("code") == "PARSE");
  CHECK(bad.body.at("details").at("position") == 7);

  const ApiResponse invalid = api.event("create", {{"concept", "Person"}, {"values", {{"age", "x"}}}});
  CHECK(invalid.status == 400);
  CHECK(invalid.body.at("details").at("fields").size() == 2);
}

TEST_CASE("metas, rollback and the log are exposed") {
  Api api;
  api.call("POST", "/concepts", person_definition());
  for (int age : {10, 20, 30}) api.event("create", {{"concept", "Person"}, {"values", {{"name", "p"}, {"age", age}}}});
  const ApiResponse meta = api.call("POST", "/meta", {{"name", "Adults"}, {"formula", "age >= 18"}, {"domain", "Person"}});
  REQUIRE(meta.status == 201);
  const ObjectId adults = meta.body.at("created").at(0);
  const ApiResponse extent = api.call("GET", "/meta/" + std::to_string(adults) + "/extent");
  CHECK(extent.status == 200);
  CHECK(extent.body.at("items").size() == 2);

  const StateIndex head = api.engine.head();
  const ApiResponse rb = api.call("POST", "/rollback", {{"to", 2}});
  CHECK(rb.status == 201);
  CHECK(rb.body.at("state") == head + 1);
  CHECK(rb.body.at("content_hash") == api.engine.snapshot(2).content_hash);
  const ApiResponse beyond = api.call("POST", "/rollback", {{"to", 99999}});
  CHECK(beyond.status == 400);
  CHECK(beyond.body.at("code") == "STATE_BEYOND_HEAD");

  const ApiResponse log = api.call("GET", "/log");
  CHECK(log.status == 200);
  CHECK(log.body.at("items").size() == head + 1);
  CHECK(log.body.at("items").back().at("kind") == "rollback_marker");

  CHECK(api.call("GET", "/nowhere").status == 400);
  CHECK(api.call("GET", "/objects/abc").status == 400);
  CHECK(api.call("GET", "/objects/424242").status == 404);
}

TEST_CASE("appraisal what-if requests do not change the store") {
  Api api;
  install_shipped(api.engine, *api.engine.admin_session(), all_pack_names());
  SeedOptions o;
  o.employees = 100;
  o.perfect = true;
  seed_demo(api.engine, *api.engine.admin_session(), o);
  const StoreSnapshot before = api.engine.snapshot();
  const ApiResponse r = api.call("POST", "/appraise", json::object());
  REQUIRE(r.status == 200);
  const ObjectId root = r.body.at("root");
  CHECK(api.call("POST", "/appraise", {{"unit", root}}).body.at("unit").at("value") == 1.0);
  CHECK(api.call("POST", "/appraise", {{"params", {{"w_s", 2.0}}}}).status == 400);
  CHECK(api.engine.snapshot() == before);
  const ApiResponse mandatory = api.call("GET", "/mandatory", json(), true,
                                         {{"concept", "Employee"}, {"draft", R"({"citizenship":"foreign"})"}});
  CHECK(mandatory.status == 200);
  CHECK(std::find(mandatory.body.at("fields").begin(), mandatory.body.at("fields").end(), "visa_no") !=
        mandatory.body.at("fields").end());
}

TEST_CASE("malformed requests always yield a structured error") {
  Api api;
  api.call("POST", "/concepts", person_definition());
  api.event("create", {{"concept", "Person"}, {"values", {{"name", "p"}}}});
  const std::set<std::string> codes = {"PARSE",          "UNKNOWN_ID",     "UNKNOWN_CONCEPT", "NONE_SATISFIES", "AMBIGUOUS",
                                       "STRATIFICATION", "ACCESS_DENIED",  "VALIDATION",      "RULE_REJECTION", "CONFLICT",
                                       "STALE_STORE",    "STATE_BEYOND_HEAD", "AUTH_FAILED",  "NO_ASSIGNMENT"};
  const std::vector<std::string> methods = {"GET", "POST", "DELETE", "PUT"};
  const std::vector<std::string> paths = {"/concepts", "/objects",  "/objects/100", "/objects/-1",  "/events",
                                          "/query",    "/meta",     "/meta/100/extent", "/mandatory", "/appraise",
                                          "/vacancies/100/candidates", "/packs/analyze", "/packs/apply", "/rollback",
                                          "/log",      "/sessions/x", "/", "//objects//"};
  const std::vector<std::string> bodies = {"", "{", "[]", "null", "42", R"({"kind":7})", R"({"kind":"create","payload":[]})",
                                           R"({"formula":"age >","domain":"Person"})", R"({"to":"x"})",
                                           R"({"formula":"age = 1","domain":"Nowhere","mode":"bad"})",
                                           R"({"unit":"root","params":{"w_s":"a"}})", R"({"name":"P","concepts":{}})"};
  const std::vector<std::map<std::string, std::string>> queries = {
      {}, {{"state", "abc"}}, {{"state", "99999"}}, {{"concept", "Nowhere"}}, {{"limit", "-5"}}, {{"cursor", "x"}}};
  Rng rng(3);
  for (int i = 0; i < 1500; ++i) {
    ApiRequest r;
    r.method = rng.pick(methods);
    r.path = rng.pick(paths);
    r.body = rng.pick(bodies);
    r.query = rng.pick(queries);
    r.token = rng.chance(85) ? api.token : std::string("bogus");
    const ApiResponse resp = api.service.handle(r);
    if (resp.status < 400) continue;
    INFO(r.method << " " << r.path << " " << r.body);
    REQUIRE(resp.body.is_object());
    CHECK(codes.count(resp.body.value("code", std::string())));
    CHECK(resp.body.at("message").is_string());
    CHECK(resp.body.at("details").is_object());
  }
}

TEST_CASE("the HTTP transport serves the same API") {
  Engine engine;
  HttpServer server(engine, "127.0.0.1");
  const int port = server.bind(0);
  REQUIRE(port > 0);
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto opened = client.Post("/sessions", R"({"login":"admin","password":"admin"})", "application/json");
  REQUIRE(opened);
  CHECK(opened->status == 200);
  const std::string token = json::parse(opened->body).at("session_id");

  auto anon = client.Get("/concepts");
  REQUIRE(anon);
  CHECK(anon->status == 401);
  CHECK(json::parse(anon->body).at("code") == "AUTH_FAILED");

  httplib::Headers bearer = {{"Authorization", "Bearer " + token}};
  auto defined = client.Post("/concepts", bearer, person_definition().dump(), "application/json");
  REQUIRE(defined);
  CHECK(defined->status == 201);
  httplib::Headers header = {{"X-Session-Token", token}};
  auto concepts = client.Get("/concepts", header);
  REQUIRE(concepts);
  CHECK(concepts->status == 200);
  const json listing = json::parse(concepts->body);
  bool found = false;
  for (const auto& c : listing.at("items")) found = found || c.at("name") == "Person";
  CHECK(found);
  auto malformed = client.Post("/events", bearer, "{not json", "application/json");
  REQUIRE(malformed);
  CHECK(malformed->status == 400);

  server.stop();
  thread.join();
}
