#include "unistore/service.hpp"

#include <algorithm>
#include <charconv>
#include <regex>

#include "unistore/appraisal.hpp"
#include "unistore/eval.hpp"
#include "unistore/org.hpp"
#include "unistore/packs.hpp"

namespace unistore {

namespace {

using nlohmann::json;

Error bad_request(const std::string& message, json details = json::object()) {
  return Error(ErrorKind::Validation, message, std::move(details));
}

std::int64_t parse_int(const std::string& text, const std::string& field) {
  std::int64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw bad_request("parameter '" + field + "' must be an integer", {{"field", field}});
  return v;
}

std::optional<std::int64_t> query_int(const ApiRequest& r, const std::string& key) {
  auto it = r.query.find(key);
  if (it == r.query.end() || it->second.empty()) return std::nullopt;
  return parse_int(it->second, key);
}

std::optional<StateIndex> body_state(const json& body) {
  if (!body.contains("state") || body.at("state").is_null()) return std::nullopt;
  if (!body.at("state").is_number_integer()) throw bad_request("'state' must be an integer", {{"field", "state"}});
  return body.at("state").get<StateIndex>();
}

std::string body_string(const json& body, const std::string& key, bool required = true) {
  if (!body.contains(key) || body.at(key).is_null()) {
    if (required) throw bad_request("missing field '" + key + "'", {{"fields", {{{"field", key}, {"problem", "missing"}}}}});
    return {};
  }
  if (!body.at(key).is_string()) throw bad_request("field '" + key + "' must be a string", {{"field", key}});
  return body.at(key).get<std::string>();
}

ObjectId id_from_json(const json& v, const std::string& field) {
  if (!v.is_number_integer()) throw bad_request("field '" + field + "' must be an object id", {{"field", field}});
  return v.get<ObjectId>();
}

// Domain given as a name or a numeric id.
ObjectId domain_of(const Snapshot& snap, const std::string& text) {
  if (!text.empty() && std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isdigit(c); })) {
    const ObjectId id = parse_int(text, "domain");
    if (!snap.is_concept(id) && !snap.is_meta(id))
      throw Error(ErrorKind::UnknownDomain, "id " + text + " is not a domain", {{"domain", id}});
    return id;
  }
  return snap.resolve_domain(text);
}

json attribute_json(const Snapshot& snap, const AttributeSpec& a) {
  std::string type(type_name(a.type));
  if (a.type == ValueType::Reference) type = "reference(" + snap.name_of(a.target) + ")";
  return {{"name", a.name}, {"type", type}, {"required", a.required}};
}

json schema_json(const Snapshot& snap, const ConceptSchema& s) {
  json attrs = json::array();
  for (const auto& a : s.attributes) attrs.push_back(attribute_json(snap, a));
  return {{"id", s.id}, {"name", s.name}, {"attributes", attrs}, {"origin", s.origin}, {"defined_at", s.defined_at}};
}

json meta_json(const Snapshot& snap, const MetaDef& m) {
  json j = {{"id", m.id},     {"name", m.name}, {"level", m.level}, {"domain", snap.name_of(m.domain)},
            {"formula", m.formula.print()}, {"defined_at", m.defined_at}};
  if (const auto* rec = snap.alive(m.id)) {
    for (const char* key : {"description", "audited"})
      if (auto it = rec->values.find(key); it != rec->values.end()) j[key] = to_json(it->second);
  }
  return j;
}

bool readable(const Session& s, ObjectId id, const Snapshot& snap) {
  return static_cast<bool>(check_access(s, Action::Read, id, snap));
}

void require_decision(const Decision& d, json details = json::object()) {
  if (!d) {
    details["reason"] = d.reason;
    throw Error(ErrorKind::AccessDenied, "access denied: " + d.reason, details);
  }
}

// Cursor pagination over ascending ids: items strictly after `cursor`.
json page(const Snapshot& snap, const std::vector<ObjectId>& ids, const ApiRequest& r) {
  const ObjectId cursor = query_int(r, "cursor").value_or(0);
  std::int64_t limit = query_int(r, "limit").value_or(kDefaultPageSize);
  if (limit <= 0 || limit > kMaxPageSize)
    throw bad_request("limit must lie in 1.." + std::to_string(kMaxPageSize), {{"field", "limit"}});
  std::vector<ObjectId> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  json items = json::array();
  json next = nullptr;
  for (ObjectId id : sorted) {
    if (id <= cursor) continue;
    if (static_cast<std::int64_t>(items.size()) == limit) {
      next = items.back().at("individual");
      break;
    }
    items.push_back(snap.describe(id).to_json());
  }
  return {{"state", snap.state()}, {"items", items}, {"next_cursor", next}, {"total", sorted.size()}};
}

std::vector<ObjectId> visible(const Session& s, const std::vector<ObjectId>& ids, const Snapshot& snap) {
  std::vector<ObjectId> out;
  for (ObjectId id : ids)
    if (readable(s, id, snap)) out.push_back(id);
  return out;
}

ComponentPack pack_from_body(const json& body) {
  if (body.contains("manifest") && body.at("manifest").is_object())
    return parse_pack(body.at("manifest"), shipped_packs_dir() / "request.json");
  const std::string name = body.contains("manifest") ? body_string(body, "manifest") : body_string(body, "name");
  return load_pack(resolve_manifest(name));
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    std::size_t j = i;
    while (j < path.size() && path[j] != '/') ++j;
    if (j > i) parts.push_back(path.substr(i, j - i));
    i = j;
  }
  return parts;
}

}  // namespace

json api_error_body(const Error& error) { return error.to_json(); }

ApiResponse Service::handle(const ApiRequest& request) {
  ApiResponse response;
  try {
    int status = 200;
    response.body = dispatch(request, status);
    response.status = status;
  } catch (const Error& e) {
    response.status = http_status(e.kind());
    response.body = api_error_body(e);
  } catch (const json::exception& e) {
    const Error err = bad_request(std::string("malformed request: ") + e.what());
    response.status = http_status(err.kind());
    response.body = api_error_body(err);
  } catch (const std::exception& e) {
    const Error err = bad_request(std::string("request failed: ") + e.what());
    response.status = http_status(err.kind());
    response.body = api_error_body(err);
  }
  return response;
}

json Service::dispatch(const ApiRequest& r, int& status) {
  const auto parts = split_path(r.path);
  const std::string& m = r.method;
  json body = json::object();
  if (!r.body.empty()) {
    try {
      body = json::parse(r.body);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::Parse, std::string("request body is not valid JSON: ") + e.what(), {{"position", e.byte}});
    }
    if (!body.is_object()) throw bad_request("request body must be an object");
  }
  auto route = [&](const char* method, std::initializer_list<const char*> shape) {
    if (m != method || parts.size() != shape.size()) return false;
    std::size_t i = 0;
    for (const char* s : shape) {
      if (std::string_view(s) != "*" && parts[i] != s) return false;
      ++i;
    }
    return true;
  };
  auto path_id = [&](std::size_t i) { return parse_int(parts[i], "id"); };

  // ---- sessions -------------------------------------------------------------
  if (route("POST", {"sessions"})) {
    auto s = engine_.open_session(Credentials{body_string(body, "login"), body_string(body, "password")});
    return {{"session_id", s->id},
            {"scenario", scenario_name(s->profile.scenario)},
            {"user", s->user},
            {"state", engine_.head()},
            {"profile", s->profile.to_json()}};
  }
  if (route("DELETE", {"sessions", "*"})) {
    engine_.session(parts[1]);  // AuthFailed / SessionClosed for unknown ids
    engine_.close_session(parts[1]);
    return {{"closed", parts[1]}};
  }

  if (r.token.empty()) throw Error(ErrorKind::AuthFailed, "a session token is required");
  const auto session_ptr = engine_.session(r.token);
  const Session& session = *session_ptr;
  const std::optional<StateIndex> qstate = query_int(r, "state");

  // ---- concepts ---------------------------------------------------------------
  if (route("GET", {"concepts"})) {
    return engine_.read(qstate, [&](const Snapshot& snap) {
      json items = json::array();
      for (ObjectId c : snap.all_concepts())
        if (check_concept(session, Action::Read, c, snap)) items.push_back(schema_json(snap, *snap.schema(c)));
      return json{{"state", snap.state()}, {"items", items}};
    });
  }
  if (route("POST", {"concepts"})) {
    const bool extend = body.contains("concept");
    Receipt rec = extend ? engine_.submit(session, "extend_concept", body) : engine_.submit(session, "define_concept", body);
    status = 201;
    return rec.to_json();
  }

  // ---- objects ----------------------------------------------------------------
  if (route("GET", {"objects"})) {
    auto it = r.query.find("concept");
    if (it == r.query.end() || it->second.empty()) throw bad_request("query parameter 'concept' is required", {{"field", "concept"}});
    return engine_.read(qstate, [&](const Snapshot& snap) {
      const ObjectId c = domain_of(snap, it->second);
      require_decision(check_concept(session, Action::Read, c, snap), {{"concept", snap.name_of(c)}});
      return page(snap, visible(session, snap.members(c), snap), r);
    });
  }
  if (route("GET", {"objects", "*"})) {
    const ObjectId id = path_id(1);
    return engine_.read(qstate, [&](const Snapshot& snap) {
      DataObject obj = snap.describe(id);
      require_decision(check_access(session, Action::Read, id, snap), {{"id", id}});
      json j = obj.to_json();
      j["concept_name"] = snap.name_of(obj.concept_id);
      return j;
    });
  }

  // ---- events -----------------------------------------------------------------
  if (route("POST", {"events"})) {
    const std::string kind = body_string(body, "kind");
    json payload = body.contains("payload") ? body.at("payload") : json::object();
    if (!payload.is_object()) throw bad_request("'payload' must be an object", {{"field", "payload"}});
    Receipt rec = engine_.submit(session, kind, payload);
    status = 201;
    return rec.to_json();
  }

  // ---- query ------------------------------------------------------------------
  if (route("POST", {"query"})) {
    const std::string text = body_string(body, "formula");
    const std::string domain_text = body_string(body, "domain");
    const std::string mode = body_string(body, "mode", false);
    if (!mode.empty() && mode != "extent" && mode != "individuate")
      throw bad_request("mode must be 'extent' or 'individuate'", {{"field", "mode"}});
    const Formula formula = Formula::parse(text);
    return engine_.read(body_state(body), [&](const Snapshot& snap) {
      const ObjectId domain = domain_of(snap, domain_text);
      require_decision(check_concept(session, Action::Read, domain, snap), {{"domain", domain_text}});
      typecheck(formula, snap.member_concept(domain), snap);
      std::vector<ObjectId> matches;
      for (ObjectId id : snap.members(domain))
        if (evaluate(formula, id, snap) && readable(session, id, snap)) matches.push_back(id);
      if (mode == "individuate") {
        if (matches.empty())
          throw Error(ErrorKind::NoneSatisfies, "no object satisfies '" + formula.print() + "'", {{"count", 0}});
        if (matches.size() > 1)
          throw Error(ErrorKind::Ambiguous, std::to_string(matches.size()) + " objects satisfy '" + formula.print() + "'",
                      {{"count", matches.size()}});
        return json{{"state", snap.state()}, {"id", matches.front()}, {"object", snap.describe(matches.front()).to_json()}};
      }
      ApiRequest paging = r;
      if (body.contains("cursor")) paging.query["cursor"] = std::to_string(id_from_json(body.at("cursor"), "cursor"));
      if (body.contains("limit")) paging.query["limit"] = std::to_string(id_from_json(body.at("limit"), "limit"));
      json result = page(snap, matches, paging);
      result["formula"] = formula.print();
      return result;
    });
  }

  // ---- metadata tower -----------------------------------------------------------
  if (route("POST", {"meta"})) {
    Receipt rec = engine_.submit(session, "comprehend", body);
    status = 201;
    return rec.to_json();
  }
  if (route("GET", {"meta"})) {
    return engine_.read(qstate, [&](const Snapshot& snap) {
      json items = json::array();
      for (ObjectId id : snap.all_metas())
        if (check_concept(session, Action::Read, id, snap)) items.push_back(meta_json(snap, *snap.meta(id)));
      return json{{"state", snap.state()}, {"items", items}};
    });
  }
  if (route("GET", {"meta", "*", "extent"})) {
    const ObjectId id = path_id(1);
    return engine_.read(qstate, [&](const Snapshot& snap) {
      if (!snap.is_meta(id)) throw Error(ErrorKind::UnknownDomain, "id " + parts[1] + " is not a meta", {{"id", id}});
      require_decision(check_concept(session, Action::Read, id, snap), {{"meta", snap.name_of(id)}});
      json result = page(snap, visible(session, snap.meta_extent(id), snap), r);
      result["meta"] = meta_json(snap, *snap.meta(id));
      return result;
    });
  }
  if (route("GET", {"mandatory"})) {
    auto it = r.query.find("concept");
    if (it == r.query.end() || it->second.empty()) throw bad_request("query parameter 'concept' is required", {{"field", "concept"}});
    json draft_json = json::object();
    if (auto d = r.query.find("draft"); d != r.query.end() && !d->second.empty()) {
      try {
        draft_json = json::parse(d->second);
      } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Parse, std::string("draft is not valid JSON: ") + e.what(), {{"position", e.byte}});
      }
      if (!draft_json.is_object()) throw bad_request("draft must be an object", {{"field", "draft"}});
    }
    return engine_.read(qstate, [&](const Snapshot& snap) {
      const ObjectId c = domain_of(snap, it->second);
      const auto& schema = snap.schema_or_throw(c);
      ValueMap draft;
      for (const auto& [k, v] : draft_json.items()) {
        const auto* spec = schema.attribute(k);
        if (!spec) throw Error(ErrorKind::UnknownAttribute, "unknown attribute '" + k + "'", {{"attribute", k}});
        draft[k] = value_from_json(v, *spec);
      }
      const auto fields = mandatory_fields(session, c, snap, draft);
      return json{{"state", snap.state()}, {"concept", schema.name}, {"fields", fields}};
    });
  }

  // ---- appraisal ----------------------------------------------------------------
  if (route("POST", {"appraise"})) {
    return engine_.read(body_state(body), [&](const Snapshot& snap) {
      OrgModel org = OrgModel::from_snapshot(snap);
      AppraisalParams params = AppraisalParams::from_snapshot(snap);
      if (body.contains("params")) params = AppraisalParams::from_json(body.at("params"), params);
      if (body.contains("moves")) {
        if (!body.at("moves").is_array()) throw bad_request("'moves' must be a list", {{"field", "moves"}});
        for (const auto& mv : body.at("moves")) {
          if (!mv.is_object()) throw bad_request("each move is {employee, position}", {{"field", "moves"}});
          const ObjectId emp = id_from_json(mv.value("employee", json()), "employee");
          const ObjectId pos = id_from_json(mv.value("position", json()), "position");
          apply_move(org, emp, pos);
        }
      }
      const auto scores = appraise_all(org, params);
      json units = json::array();
      for (const auto& [id, score] : scores)
        if (session.profile.sees_unit(id)) units.push_back(score.to_json());
      json result = {{"state", snap.state()}, {"params", params.to_json()}, {"root", org.root ? json(*org.root) : json()}, {"units", units}};
      if (body.contains("unit") && !body.at("unit").is_null()) {
        const ObjectId u = id_from_json(body.at("unit"), "unit");
        if (!scores.count(u)) throw Error(ErrorKind::UnknownId, "unit " + std::to_string(u) + " is not an org unit", {{"id", u}});
        if (!session.profile.sees_unit(u))
          throw Error(ErrorKind::AccessDenied, "access denied: unit outside the visible scope", {{"unit", u}});
        result["unit"] = scores.at(u).to_json();
      }
      if (body.contains("employee") && !body.at("employee").is_null()) {
        const ObjectId e = id_from_json(body.at("employee"), "employee");
        require_decision(check_access(session, Action::Read, e, snap), {{"employee", e}});
        result["employee"] = appraise_employee(org, e, params).to_json();
      }
      return result;
    });
  }
  if (route("GET", {"vacancies", "*", "candidates"})) {
    const ObjectId pos = path_id(1);
    return engine_.read(qstate, [&](const Snapshot& snap) {
      snap.describe(pos);
      require_decision(check_access(session, Action::Read, pos, snap), {{"position", pos}});
      OrgModel org = OrgModel::from_snapshot(snap);
      json items = json::array();
      for (const auto& c : rank_candidates(org, pos)) {
        if (!readable(session, c.employee, snap)) continue;
        json j = c.to_json();
        if (const auto* rec = snap.alive(c.employee))
          if (auto it = rec->values.find("name"); it != rec->values.end()) j["name"] = to_json(it->second);
        items.push_back(j);
      }
      return json{{"state", snap.state()}, {"position", pos}, {"candidates", items}};
    });
  }

  // ---- packs ----------------------------------------------------------------------
  if (route("POST", {"packs", "analyze"})) {
    const ComponentPack pack = pack_from_body(body);
    return engine_.read(std::nullopt, [&](const Snapshot& snap) {
      return analyze_pack(pack, snap, engine_.config().tower).to_json();
    });
  }
  if (route("POST", {"packs", "apply"})) {
    const ComponentPack pack = pack_from_body(body);
    MergePlan plan = engine_.read(std::nullopt, [&](const Snapshot& snap) {
      return analyze_pack(pack, snap, engine_.config().tower);
    });
    // A client that analyzed earlier pins its plan to that state.
    if (body.contains("analyzed_at") && !body.at("analyzed_at").is_null())
      plan.analyzed_at = id_from_json(body.at("analyzed_at"), "analyzed_at");
    const StateIndex state = apply_plan(engine_, session, plan);
    return {{"state", state}, {"plan", plan.to_json()}};
  }

  // ---- rollback and log -------------------------------------------------------------
  if (route("POST", {"rollback"})) {
    if (!body.contains("to")) throw bad_request("missing field 'to'", {{"fields", {{{"field", "to"}, {"problem", "missing"}}}}});
    const StateIndex to = id_from_json(body.at("to"), "to");
    const StateIndex state = engine_.rollback(session, to);
    status = 201;
    return {{"state", state}, {"to", to}, {"content_hash", engine_.snapshot(state).content_hash}};
  }
  if (route("GET", {"log"})) {
    const StateIndex head = engine_.head();
    const StateIndex from = query_int(r, "from").value_or(1);
    const StateIndex to = query_int(r, "to").value_or(head);
    if (to > head) throw Error(ErrorKind::StateBeyondHead, "state " + std::to_string(to) + " is beyond head", {{"head", head}, {"state", to}});
    json items = json::array();
    for (const auto& rec : engine_.log(from, to)) items.push_back(rec.to_json(true));
    return {{"head", head}, {"items", items}};
  }

  throw Error(ErrorKind::Validation, "no route for " + m + " " + r.path, {{"method", m}, {"path", r.path}});
}

}  // namespace unistore
