#include "oncosynth/obds.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include <expat.h>
#include <fmt/core.h>

#include "oncosynth/errors.hpp"

namespace oncosynth {

std::string_view to_string(Gender gender) {
    return gender == Gender::male ? "male" : "female";
}

Gender parse_gender(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "male" || lower == "m") {
        return Gender::male;
    }
    if (lower == "female" || lower == "f") {
        return Gender::female;
    }
    throw DataError("unknown gender '" + std::string(text) + "'");
}

std::string join_substances(const SubstanceSet& substances) {
    std::string out;
    for (const auto& s : substances) {
        if (!out.empty()) {
            out += '+';
        }
        out += s;
    }
    return out;
}

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

int same_day_rank(const ReportPayload& payload) {
    return std::visit(Overloaded{
                          [](const Diagnosis&) { return 0; },
                          [](const Surgery&) { return 1; },
                          [](const SystemicTherapyStart&) { return 2; },
                          [](const RadiotherapyStart&) { return 3; },
                          [](const SystemicTherapyEnd&) { return 4; },
                          [](const RadiotherapyEnd&) { return 5; },
                          [](const Death&) { return 6; },
                      },
                      payload);
}

std::string_view payload_element_name(const ReportPayload& payload) {
    return std::visit(Overloaded{
                          [](const Diagnosis&) { return std::string_view{"diagnosis"}; },
                          [](const Surgery&) { return std::string_view{"surgery"}; },
                          [](const SystemicTherapyStart&) {
                              return std::string_view{"systemic_therapy_start"};
                          },
                          [](const SystemicTherapyEnd&) {
                              return std::string_view{"systemic_therapy_end"};
                          },
                          [](const RadiotherapyStart&) {
                              return std::string_view{"radiotherapy_start"};
                          },
                          [](const RadiotherapyEnd&) {
                              return std::string_view{"radiotherapy_end"};
                          },
                          [](const Death&) { return std::string_view{"death"}; },
                      },
                      payload);
}

std::string payload_code(const ReportPayload& payload) {
    return std::visit(Overloaded{
                          [](const Diagnosis& d) { return d.icd10; },
                          [](const Surgery& s) { return s.ops; },
                          [](const SystemicTherapyStart& s) { return join_substances(s.substances); },
                          [](const auto&) { return std::string{}; },
                      },
                      payload);
}

bool report_chronological_less(const ObdsReport& a, const ObdsReport& b) {
    if (a.report_date != b.report_date) {
        return a.report_date < b.report_date;
    }
    const int ra = same_day_rank(a.payload);
    const int rb = same_day_rank(b.payload);
    if (ra != rb) {
        return ra < rb;
    }
    return payload_code(a.payload) < payload_code(b.payload);
}

const PatientMaster* Dataset::find_patient(std::string_view patient_id) const {
    for (const auto& p : patients) {
        if (p.patient_id == patient_id) {
            return &p;
        }
    }
    return nullptr;
}

bool is_valid_icd10(std::string_view code) {
    return code.size() == 5 && code[0] == 'C' && code[1] == '7' &&
           std::isdigit(static_cast<unsigned char>(code[2])) && code[3] == '.' &&
           std::isdigit(static_cast<unsigned char>(code[4]));
}

namespace {

bool is_valid_substance(std::string_view name) {
    if (name.empty()) {
        return false;
    }
    return name.find_first_of("+[]\t\n\r|") == std::string_view::npos;
}

bool is_valid_code_token(std::string_view code) {
    return !code.empty() && code.find_first_of(" \t\n\r[]|") == std::string_view::npos;
}

}  // namespace

std::vector<std::string> dataset_violations(const Dataset& dataset) {
    std::vector<std::string> issues;
    std::unordered_set<std::string> ids;
    for (const auto& p : dataset.patients) {
        if (p.patient_id.empty()) {
            issues.emplace_back("patient with empty id");
        } else if (!ids.insert(p.patient_id).second) {
            issues.push_back("duplicate patient id '" + p.patient_id + "'");
        }
    }
    std::unordered_map<std::string, int> diagnoses;
    std::unordered_map<std::string, int> deaths;
    for (std::size_t i = 0; i < dataset.reports.size(); ++i) {
        const auto& r = dataset.reports[i];
        const std::string where = fmt::format("report #{} (patient '{}')", i + 1, r.patient_id);
        if (!ids.contains(r.patient_id)) {
            issues.push_back(where + ": unknown patient");
        }
        std::visit(Overloaded{
                       [&](const Diagnosis& d) {
                           if (!is_valid_icd10(d.icd10)) {
                               issues.push_back(where + ": ICD-10 code '" + d.icd10 +
                                                "' does not match C7x.y");
                           }
                           if (++diagnoses[r.patient_id] == 2) {
                               issues.push_back("patient '" + r.patient_id +
                                                "' has more than one diagnosis report");
                           }
                       },
                       [&](const Surgery& s) {
                           if (!is_valid_code_token(s.ops)) {
                               issues.push_back(where + ": empty or malformed OPS code '" +
                                                s.ops + "'");
                           }
                       },
                       [&](const SystemicTherapyStart& s) {
                           if (s.substances.empty()) {
                               issues.push_back(where + ": systemic therapy without substances");
                           }
                           for (const auto& name : s.substances) {
                               if (!is_valid_substance(name)) {
                                   issues.push_back(where + ": invalid substance name '" + name +
                                                    "'");
                               }
                           }
                       },
                       [&](const Death&) {
                           if (++deaths[r.patient_id] == 2) {
                               issues.push_back("patient '" + r.patient_id +
                                                "' has more than one death report");
                           }
                       },
                       [](const auto&) {},
                   },
                   r.payload);
    }
    return issues;
}

// ---------------------------------------------------------------------------
// Parsing: expat builds a small element tree, then the tree is checked
// against the profile.

namespace {

struct XmlNode {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<std::unique_ptr<XmlNode>> children;
    std::string text;
    std::size_t line = 0;
    std::size_t column = 0;

    const std::string* attribute(std::string_view key) const {
        for (const auto& [k, v] : attributes) {
            if (k == key) {
                return &v;
            }
        }
        return nullptr;
    }
};

struct TreeBuilder {
    XML_Parser parser = nullptr;
    std::unique_ptr<XmlNode> root;
    std::vector<XmlNode*> stack;

    static void on_start(void* user, const XML_Char* name, const XML_Char** attrs) {
        auto* self = static_cast<TreeBuilder*>(user);
        auto node = std::make_unique<XmlNode>();
        node->name = name;
        node->line = XML_GetCurrentLineNumber(self->parser);
        node->column = XML_GetCurrentColumnNumber(self->parser) + 1;
        for (int i = 0; attrs[i] != nullptr; i += 2) {
            node->attributes.emplace_back(attrs[i], attrs[i + 1]);
        }
        XmlNode* raw = node.get();
        if (self->stack.empty()) {
            self->root = std::move(node);
        } else {
            self->stack.back()->children.push_back(std::move(node));
        }
        self->stack.push_back(raw);
    }

    static void on_end(void* user, const XML_Char*) {
        static_cast<TreeBuilder*>(user)->stack.pop_back();
    }

    static void on_text(void* user, const XML_Char* s, int len) {
        auto* self = static_cast<TreeBuilder*>(user);
        if (!self->stack.empty()) {
            self->stack.back()->text.append(s, static_cast<std::size_t>(len));
        }
    }
};

std::unique_ptr<XmlNode> build_tree(std::string_view bytes) {
    std::unique_ptr<XML_ParserStruct, decltype(&XML_ParserFree)> parser(
        XML_ParserCreate("UTF-8"), &XML_ParserFree);
    if (!parser) {
        throw Error("cannot allocate XML parser");
    }
    TreeBuilder builder;
    builder.parser = parser.get();
    XML_SetUserData(parser.get(), &builder);
    XML_SetElementHandler(parser.get(), &TreeBuilder::on_start, &TreeBuilder::on_end);
    XML_SetCharacterDataHandler(parser.get(), &TreeBuilder::on_text);
    if (XML_Parse(parser.get(), bytes.data(), static_cast<int>(bytes.size()), XML_TRUE) ==
        XML_STATUS_ERROR) {
        throw ParseError(std::string("malformed XML: ") +
                             XML_ErrorString(XML_GetErrorCode(parser.get())),
                         XML_GetCurrentLineNumber(parser.get()),
                         XML_GetCurrentColumnNumber(parser.get()) + 1);
    }
    if (!builder.root) {
        throw ParseError("empty document", 1, 1);
    }
    return std::move(builder.root);
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::string location(const XmlNode& node) {
    return fmt::format(" at line {}, column {}", node.line, node.column);
}

const std::string& required_attribute(const XmlNode& node, std::string_view key) {
    const std::string* value = node.attribute(key);
    if (value == nullptr) {
        throw SchemaError("element <" + node.name + "> is missing attribute '" +
                              std::string(key) + "'" + location(node),
                          node.name + "@" + std::string(key));
    }
    return *value;
}

void allow_attributes(const XmlNode& node, std::initializer_list<std::string_view> allowed) {
    for (const auto& [key, value] : node.attributes) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw SchemaError("unexpected attribute '" + key + "' on <" + node.name + ">" +
                                  location(node),
                              node.name + "@" + key);
        }
    }
}

void forbid_children(const XmlNode& node) {
    if (!node.children.empty()) {
        throw SchemaError("unexpected element <" + node.children.front()->name + "> inside <" +
                              node.name + ">" + location(*node.children.front()),
                          node.children.front()->name);
    }
}

const XmlNode& required_child(const XmlNode& parent, std::string_view name) {
    const XmlNode* found = nullptr;
    for (const auto& child : parent.children) {
        if (child->name == name) {
            if (found != nullptr) {
                throw SchemaError("duplicate element <" + child->name + ">" + location(*child),
                                  child->name);
            }
            found = child.get();
        }
    }
    if (found == nullptr) {
        throw SchemaError("missing mandatory element <" + std::string(name) + "> inside <" +
                              parent.name + ">",
                          std::string(name));
    }
    return *found;
}

Date attribute_date(const XmlNode& node, std::string_view key) {
    try {
        return parse_iso_date(required_attribute(node, key));
    } catch (const SchemaError&) {
        throw;
    } catch (const DataError& e) {
        throw SchemaError(std::string(e.what()) + location(node), node.name + "@" +
                                                                     std::string(key));
    }
}

ReportPayload parse_payload(const XmlNode& node) {
    const std::string& kind = node.name;
    if (kind == "diagnosis") {
        allow_attributes(node, {"icd10"});
        forbid_children(node);
        return Diagnosis{required_attribute(node, "icd10")};
    }
    if (kind == "surgery") {
        allow_attributes(node, {"ops"});
        forbid_children(node);
        return Surgery{required_attribute(node, "ops")};
    }
    auto therapy_id = [&node]() {
        const std::string* id = node.attribute("therapy_id");
        return id != nullptr ? *id : std::string{};
    };
    if (kind == "systemic_therapy_start") {
        allow_attributes(node, {"therapy_id"});
        SystemicTherapyStart start;
        start.therapy_id = therapy_id();
        for (const auto& child : node.children) {
            if (child->name != "substance") {
                throw SchemaError("unexpected element <" + child->name + "> inside <" + kind +
                                      ">" + location(*child),
                                  child->name);
            }
            allow_attributes(*child, {});
            forbid_children(*child);
            start.substances.insert(trim(child->text));
        }
        if (start.substances.empty()) {
            throw SchemaError("<systemic_therapy_start> needs at least one <substance>" +
                                  location(node),
                              "substance");
        }
        return start;
    }
    if (kind == "systemic_therapy_end") {
        allow_attributes(node, {"therapy_id"});
        forbid_children(node);
        return SystemicTherapyEnd{therapy_id()};
    }
    if (kind == "radiotherapy_start") {
        allow_attributes(node, {"therapy_id"});
        forbid_children(node);
        return RadiotherapyStart{therapy_id()};
    }
    if (kind == "radiotherapy_end") {
        allow_attributes(node, {"therapy_id"});
        forbid_children(node);
        return RadiotherapyEnd{therapy_id()};
    }
    if (kind == "death") {
        allow_attributes(node, {});
        forbid_children(node);
        return Death{};
    }
    throw SchemaError("unknown report kind <" + kind + ">" + location(node), kind);
}

}  // namespace

Dataset parse_obds(std::string_view xml_bytes) {
    const auto root = build_tree(xml_bytes);
    if (root->name != "obds_subset") {
        throw SchemaError("root element must be <obds_subset>, found <" + root->name + ">",
                          "obds_subset");
    }
    allow_attributes(*root, {"version"});
    if (required_attribute(*root, "version") != "1") {
        throw SchemaError("unsupported profile version '" + *root->attribute("version") + "'",
                          "obds_subset@version");
    }

    for (const auto& child : root->children) {
        if (child->name != "patients" && child->name != "reports") {
            throw SchemaError("unexpected element <" + child->name + "> inside <obds_subset>" +
                                  location(*child),
                              child->name);
        }
    }
    Dataset dataset;
    const XmlNode& patients = required_child(*root, "patients");
    const XmlNode& reports = required_child(*root, "reports");
    allow_attributes(patients, {});
    allow_attributes(reports, {});

    for (const auto& node : patients.children) {
        if (node->name != "patient") {
            throw SchemaError("unexpected element <" + node->name + "> inside <patients>" +
                                  location(*node),
                              node->name);
        }
        allow_attributes(*node, {"id", "gender", "birth_date"});
        forbid_children(*node);
        PatientMaster p;
        p.patient_id = required_attribute(*node, "id");
        try {
            p.gender = parse_gender(required_attribute(*node, "gender"));
        } catch (const SchemaError&) {
            throw;
        } catch (const DataError& e) {
            throw SchemaError(std::string(e.what()) + location(*node), "patient@gender");
        }
        p.date_of_birth = attribute_date(*node, "birth_date");
        dataset.patients.push_back(std::move(p));
    }

    for (const auto& node : reports.children) {
        if (node->name != "report") {
            throw SchemaError("unexpected element <" + node->name + "> inside <reports>" +
                                  location(*node),
                              node->name);
        }
        allow_attributes(*node, {"patient_id", "date"});
        ObdsReport report;
        report.patient_id = required_attribute(*node, "patient_id");
        report.report_date = attribute_date(*node, "date");
        if (node->children.size() != 1) {
            throw SchemaError("<report> must contain exactly one payload element, found " +
                                  std::to_string(node->children.size()) + location(*node),
                              "report");
        }
        report.payload = parse_payload(*node->children.front());
        dataset.reports.push_back(std::move(report));
    }

    std::unordered_set<std::string_view> known;
    for (const auto& p : dataset.patients) {
        known.insert(p.patient_id);
    }
    for (const auto& r : dataset.reports) {
        if (!known.contains(r.patient_id)) {
            throw ReferentialError(r.patient_id);
        }
    }
    if (auto issues = dataset_violations(dataset); !issues.empty()) {
        throw ValidationError(std::move(issues));
    }
    return dataset;
}

// ---------------------------------------------------------------------------
// Writing

namespace {

std::string escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string therapy_id_attribute(const std::string& id) {
    return id.empty() ? std::string{} : " therapy_id=\"" + escape(id) + "\"";
}

}  // namespace

std::string write_obds(const Dataset& dataset) {
    if (auto issues = dataset_violations(dataset); !issues.empty()) {
        throw ValidationError(std::move(issues));
    }
    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<obds_subset version=\"1\">\n";
    out += "  <patients>\n";
    for (const auto& p : dataset.patients) {
        out += fmt::format("    <patient id=\"{}\" gender=\"{}\" birth_date=\"{}\"/>\n",
                           escape(p.patient_id), to_string(p.gender),
                           format_iso_date(p.date_of_birth));
    }
    out += "  </patients>\n";
    out += "  <reports>\n";
    for (const auto& r : dataset.reports) {
        out += fmt::format("    <report patient_id=\"{}\" date=\"{}\">\n", escape(r.patient_id),
                           format_iso_date(r.report_date));
        out += std::visit(
            Overloaded{
                [](const Diagnosis& d) {
                    return fmt::format("      <diagnosis icd10=\"{}\"/>\n", escape(d.icd10));
                },
                [](const Surgery& s) {
                    return fmt::format("      <surgery ops=\"{}\"/>\n", escape(s.ops));
                },
                [](const SystemicTherapyStart& s) {
                    std::string body = "      <systemic_therapy_start" +
                                       therapy_id_attribute(s.therapy_id) + ">\n";
                    for (const auto& name : s.substances) {
                        body += "        <substance>" + escape(name) + "</substance>\n";
                    }
                    body += "      </systemic_therapy_start>\n";
                    return body;
                },
                [](const SystemicTherapyEnd& s) {
                    return "      <systemic_therapy_end" + therapy_id_attribute(s.therapy_id) +
                           "/>\n";
                },
                [](const RadiotherapyStart& s) {
                    return "      <radiotherapy_start" + therapy_id_attribute(s.therapy_id) +
                           "/>\n";
                },
                [](const RadiotherapyEnd& s) {
                    return "      <radiotherapy_end" + therapy_id_attribute(s.therapy_id) +
                           "/>\n";
                },
                [](const Death&) { return std::string{"      <death/>\n"}; },
            },
            r.payload);
        out += "    </report>\n";
    }
    out += "  </reports>\n";
    out += "</obds_subset>\n";
    return out;
}

}  // namespace oncosynth
