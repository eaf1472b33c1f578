#include "hioscar/hierarchy.hpp"

#include "hioscar/common.hpp"
#include "hioscar/kernels.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace hioscar {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Hierarchy

Hierarchy Hierarchy::from_nodes(std::vector<HierarchyNode> nodes) {
    if (nodes.size() < 3) {
        throw FormatError("hierarchy needs at least two leaves");
    }
    const auto n = static_cast<NodeId>(nodes.size());
    const auto in_range = [n](NodeId id) { return id >= 0 && id < n; };

    Hierarchy h;
    std::vector<std::string> leaf_names;
    NodeId root = kNoNode;
    for (NodeId id = 0; id < n; ++id) {
        const auto& node = nodes[static_cast<std::size_t>(id)];
        if ((node.left == kNoNode) != (node.right == kNoNode)) {
            throw FormatError("node " + std::to_string(id) + " has exactly one child");
        }
        if (node.is_leaf()) {
            if (node.class_name.empty()) {
                throw FormatError("leaf " + std::to_string(id) + " has no class name");
            }
            leaf_names.push_back(node.class_name);
        } else {
            if (!in_range(node.left) || !in_range(node.right) || node.left == node.right) {
                throw FormatError("node " + std::to_string(id) + " has invalid children");
            }
            if (nodes[static_cast<std::size_t>(node.left)].parent != id ||
                nodes[static_cast<std::size_t>(node.right)].parent != id) {
                throw FormatError("node " + std::to_string(id) + " children do not point back to it");
            }
        }
        if (node.parent == kNoNode) {
            if (root != kNoNode) {
                throw FormatError("hierarchy has multiple roots");
            }
            root = id;
        } else if (!in_range(node.parent)) {
            throw FormatError("node " + std::to_string(id) + " has an invalid parent");
        } else {
            const auto& p = nodes[static_cast<std::size_t>(node.parent)];
            if (p.left != id && p.right != id) {
                throw FormatError("node " + std::to_string(id) + " is not a child of its parent");
            }
        }
    }
    if (root == kNoNode) {
        throw FormatError("hierarchy has no root (cycle)");
    }
    const std::size_t k = leaf_names.size();
    if (nodes.size() != 2 * k - 1) {
        throw FormatError("binary hierarchy with " + std::to_string(k) + " leaves must have " +
                          std::to_string(2 * k - 1) + " nodes");
    }
    std::vector<std::string> sorted = leaf_names;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw FormatError("duplicate leaf name '" + *std::adjacent_find(sorted.begin(), sorted.end()) + "'");
    }
    for (std::size_t i = 0; i < k; ++i) {
        if (!nodes[i].is_leaf() || nodes[i].class_name != sorted[i]) {
            throw FormatError("leaves must occupy ids 0..K-1 in sorted class order");
        }
    }

    // Depths by walking down from the root; also proves every node is reachable.
    std::vector<int> depth(nodes.size(), -1);
    std::vector<NodeId> stack{root};
    depth[static_cast<std::size_t>(root)] = 0;
    std::size_t visited = 0;
    while (!stack.empty()) {
        const NodeId id = stack.back();
        stack.pop_back();
        ++visited;
        const auto& node = nodes[static_cast<std::size_t>(id)];
        if (!node.is_leaf()) {
            for (const NodeId c : {node.left, node.right}) {
                if (depth[static_cast<std::size_t>(c)] != -1) {
                    throw FormatError("hierarchy contains a cycle");
                }
                depth[static_cast<std::size_t>(c)] = depth[static_cast<std::size_t>(id)] + 1;
                stack.push_back(c);
            }
        }
    }
    if (visited != nodes.size()) {
        throw FormatError("hierarchy has nodes unreachable from the root");
    }

    bool all_distances = true;
    for (const auto& node : nodes) {
        if (!node.is_leaf() && !node.merge_distance) {
            all_distances = false;
        }
    }
    h.nodes_ = std::move(nodes);
    h.classes_ = std::move(sorted);
    h.depth_ = std::move(depth);
    h.root_ = root;
    h.has_merge_distances_ = all_distances;
    return h;
}

const HierarchyNode& Hierarchy::node(NodeId n) const {
    if (!valid(n)) {
        throw ArgumentError("invalid node id " + std::to_string(n));
    }
    return nodes_[static_cast<std::size_t>(n)];
}

std::pair<NodeId, NodeId> Hierarchy::children(NodeId n) const {
    const auto& nd = node(n);
    if (nd.is_leaf()) {
        throw ArgumentError("node " + std::to_string(n) + " is a leaf");
    }
    return {nd.left, nd.right};
}

NodeId Hierarchy::sibling(NodeId n) const {
    const NodeId p = parent(n);
    if (p == kNoNode) {
        return kNoNode;
    }
    const auto [l, r] = children(p);
    return l == n ? r : l;
}

int Hierarchy::depth(NodeId n) const {
    node(n);
    return depth_[static_cast<std::size_t>(n)];
}

const std::string& Hierarchy::class_name(NodeId leaf) const {
    const auto& nd = node(leaf);
    if (!nd.is_leaf()) {
        throw ArgumentError("node " + std::to_string(leaf) + " is not a leaf");
    }
    return nd.class_name;
}

std::optional<NodeId> Hierarchy::find_leaf(const std::string& name) const {
    const auto it = std::lower_bound(classes_.begin(), classes_.end(), name);
    if (it == classes_.end() || *it != name) {
        return std::nullopt;
    }
    return static_cast<NodeId>(it - classes_.begin());
}

NodeId Hierarchy::leaf_of(const std::string& name) const {
    const auto leaf = find_leaf(name);
    if (!leaf) {
        throw ArgumentError("class '" + name + "' is not a leaf of the hierarchy");
    }
    return *leaf;
}

std::vector<NodeId> Hierarchy::internal_nodes() const {
    std::vector<NodeId> out;
    for (NodeId id = static_cast<NodeId>(leaf_count()); id < static_cast<NodeId>(size()); ++id) {
        out.push_back(id);
    }
    return out;
}

std::vector<std::string> Hierarchy::leaf_classes(NodeId n) const {
    std::vector<std::string> out;
    std::vector<NodeId> stack{n};
    node(n);
    while (!stack.empty()) {
        const NodeId id = stack.back();
        stack.pop_back();
        const auto& nd = nodes_[static_cast<std::size_t>(id)];
        if (nd.is_leaf()) {
            out.push_back(nd.class_name);
        } else {
            stack.push_back(nd.left);
            stack.push_back(nd.right);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

double Hierarchy::merge_distance(NodeId n) const {
    const auto& nd = node(n);
    if (!nd.merge_distance) {
        throw CapabilityError("node " + std::to_string(n) + " has no merge distance");
    }
    return *nd.merge_distance;
}

bool operator==(const Hierarchy& a, const Hierarchy& b) {
    if (a.size() != b.size() || a.root_ != b.root_) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& x = a.nodes_[i];
        const auto& y = b.nodes_[i];
        if (x.parent != y.parent || x.left != y.left || x.right != y.right || x.class_name != y.class_name ||
            x.merge_distance != y.merge_distance) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Centroids and HAC

std::vector<ClassCentroid> class_centroids(std::span<const std::vector<double>> features,
                                           const std::vector<std::string>& labels) {
    if (features.size() != labels.size()) {
        throw ArgumentError("class_centroids: feature and label counts differ");
    }
    std::map<std::string, ClassCentroid> by_class;
    std::optional<std::size_t> width;
    for (std::size_t i = 0; i < features.size(); ++i) {
        if (width && *width != features[i].size()) {
            throw ArgumentError("class_centroids: inconsistent feature lengths");
        }
        width = features[i].size();
        auto& c = by_class[labels[i]];
        if (c.count == 0) {
            c.class_name = labels[i];
            c.vector.assign(*width, 0.0);
        }
        kernels::axpy(1.0, features[i], c.vector);
        ++c.count;
    }
    if (by_class.empty()) {
        throw ArgumentError("class_centroids: no features");
    }
    std::vector<ClassCentroid> out;
    for (auto& [name, c] : by_class) {
        const double inv = 1.0 / static_cast<double>(c.count);
        for (double& v : c.vector) {
            v *= inv;
        }
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<ClassCentroid> class_centroids(const std::vector<FeatureVector>& features,
                                           const std::vector<std::string>& labels) {
    const auto rows = feature_matrix(features);
    return class_centroids(std::span<const std::vector<double>>(rows), labels);
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ArgumentError("cosine_distance: length mismatch");
    }
    const double aa = kernels::dot(a, a);
    const double bb = kernels::dot(b, b);
    if (!(aa > 0.0) || !(bb > 0.0)) {
        throw ArgumentError("cosine_distance: zero vector");
    }
    const double cosine = std::clamp(kernels::dot(a, b) / std::sqrt(aa * bb), -1.0, 1.0);
    return 1.0 - cosine;
}

Hierarchy hac_build(const std::vector<ClassCentroid>& input) {
    if (input.size() < 2) {
        throw ArgumentError("hac_build: need at least 2 centroids, got " + std::to_string(input.size()));
    }
    std::vector<ClassCentroid> centroids = input;
    std::sort(centroids.begin(), centroids.end(),
              [](const ClassCentroid& a, const ClassCentroid& b) { return a.class_name < b.class_name; });
    for (std::size_t i = 1; i < centroids.size(); ++i) {
        if (centroids[i].class_name == centroids[i - 1].class_name) {
            throw ArgumentError("hac_build: duplicate class '" + centroids[i].class_name + "'");
        }
    }
    const std::size_t k = centroids.size();

    struct Cluster {
        NodeId node;
        std::size_t size;
    };
    // Slots stay sorted by their smallest member index, which is also their key
    // for tie-breaking; a merged cluster inherits the left slot.
    std::vector<Cluster> clusters;
    std::vector<std::vector<double>> dist(k, std::vector<double>(k, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
        clusters.push_back({static_cast<NodeId>(i), 1});
        for (std::size_t j = i + 1; j < k; ++j) {
            dist[i][j] = dist[j][i] = cosine_distance(centroids[i].vector, centroids[j].vector);
        }
    }

    std::vector<HierarchyNode> nodes(2 * k - 1);
    for (std::size_t i = 0; i < k; ++i) {
        nodes[i].class_name = centroids[i].class_name;
    }
    std::vector<std::size_t> slot_of(k);  // active slot -> row in dist
    for (std::size_t i = 0; i < k; ++i) {
        slot_of[i] = i;
    }

    NodeId next = static_cast<NodeId>(k);
    while (clusters.size() > 1) {
        std::size_t best_a = 0;
        std::size_t best_b = 1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < clusters.size(); ++a) {
            for (std::size_t b = a + 1; b < clusters.size(); ++b) {
                const double d = dist[slot_of[a]][slot_of[b]];
                if (d < best) {
                    best = d;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        const std::size_t ra = slot_of[best_a];
        const std::size_t rb = slot_of[best_b];
        const auto na = static_cast<double>(clusters[best_a].size);
        const auto nb = static_cast<double>(clusters[best_b].size);
        // Lance-Williams update for average linkage.
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            if (c == best_a || c == best_b) {
                continue;
            }
            const std::size_t rc = slot_of[c];
            const double merged = (na * dist[ra][rc] + nb * dist[rb][rc]) / (na + nb);
            dist[ra][rc] = dist[rc][ra] = merged;
        }

        auto& parent = nodes[static_cast<std::size_t>(next)];
        parent.left = clusters[best_a].node;
        parent.right = clusters[best_b].node;
        parent.merge_distance = best;
        nodes[static_cast<std::size_t>(parent.left)].parent = next;
        nodes[static_cast<std::size_t>(parent.right)].parent = next;

        clusters[best_a] = {next, clusters[best_a].size + clusters[best_b].size};
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best_b));
        slot_of.erase(slot_of.begin() + static_cast<std::ptrdiff_t>(best_b));
        ++next;
    }
    return Hierarchy::from_nodes(std::move(nodes));
}

std::vector<MergeStep> merge_sequence(const Hierarchy& h) {
    std::vector<MergeStep> steps;
    for (const NodeId n : h.internal_nodes()) {
        const auto [l, r] = h.children(n);
        MergeStep step;
        step.left = h.leaf_classes(l);
        step.right = h.leaf_classes(r);
        step.distance = h.node(n).merge_distance.value_or(std::numeric_limits<double>::quiet_NaN());
        steps.push_back(std::move(step));
    }
    return steps;
}

// ---------------------------------------------------------------------------
// Queries

std::vector<NodeId> anc(const Hierarchy& h, NodeId n) {
    std::vector<NodeId> path;
    for (NodeId p = h.parent(n); p != kNoNode; p = h.parent(p)) {
        path.push_back(p);
    }
    std::reverse(path.begin(), path.end());
    return path;
}

NodeId lca(const Hierarchy& h, NodeId s, NodeId t) {
    int ds = h.depth(s);
    int dt = h.depth(t);
    while (ds > dt) {
        s = h.parent(s);
        --ds;
    }
    while (dt > ds) {
        t = h.parent(t);
        --dt;
    }
    while (s != t) {
        s = h.parent(s);
        t = h.parent(t);
    }
    return s;
}

double cumulative_cosine_distance(const Hierarchy& h, NodeId s, NodeId t) {
    if (!h.has_merge_distances()) {
        throw CapabilityError("cumulative cosine distance needs merge distances; this hierarchy was imported without them");
    }
    const NodeId q = lca(h, s, t);
    // Each side is summed on its own so that D(s, t) == D(t, s) exactly.
    const auto climb = [&](NodeId n) {
        double total = 0.0;
        while (n != q) {
            const NodeId p = h.parent(n);
            total += h.merge_distance(p);
            n = p;
        }
        return total;
    };
    return climb(s) + climb(t);
}

// ---------------------------------------------------------------------------
// Import / export

namespace {

// Parsed tree before binarization; ids are the optional "id" fields.
struct RawNode {
    std::string name;
    std::optional<NodeId> id;
    std::optional<double> merge_distance;
    std::vector<RawNode> children;
};

RawNode raw_from_json(const json& j, int depth) {
    if (depth > 10000) {
        throw FormatError("hierarchy nesting too deep");
    }
    if (!j.is_object()) {
        throw FormatError("hierarchy node must be a JSON object");
    }
    RawNode node;
    if (j.contains("name")) {
        if (!j["name"].is_string()) {
            throw FormatError("node name must be a string");
        }
        node.name = j["name"].get<std::string>();
    }
    if (j.contains("id")) {
        if (!j["id"].is_number_integer()) {
            throw FormatError("node id must be an integer");
        }
        node.id = j["id"].get<NodeId>();
    }
    if (j.contains("merge_distance") && !j["merge_distance"].is_null()) {
        if (!j["merge_distance"].is_number()) {
            throw FormatError("merge_distance must be a number");
        }
        node.merge_distance = j["merge_distance"].get<double>();
    }
    if (j.contains("children")) {
        if (!j["children"].is_array()) {
            throw FormatError("children must be an array");
        }
        for (const auto& child : j["children"]) {
            node.children.push_back(raw_from_json(child, depth + 1));
        }
    }
    if (node.children.empty() && node.name.empty()) {
        throw FormatError("leaf without a name");
    }
    return node;
}

RawNode raw_from_edges(const std::string& text) {
    std::map<std::string, std::vector<std::string>> children;
    std::map<std::string, std::string> parent_of;
    std::set<std::string> names;
    std::istringstream in(text);
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const std::string trimmed = trim(line);
        if (trimmed.empty() || trimmed.front() == '#') {
            continue;
        }
        auto fields = split(trimmed, ',');
        if (fields.size() != 2) {
            throw FormatError("edge list line " + std::to_string(line_number) + ": expected 'parent,child'");
        }
        const std::string p = trim(fields[0]);
        const std::string c = trim(fields[1]);
        if (line_number == 1 && p == "parent" && c == "child") {
            continue;
        }
        if (p.empty() || c.empty() || p == c) {
            throw FormatError("edge list line " + std::to_string(line_number) + ": bad edge");
        }
        if (!parent_of.emplace(c, p).second) {
            throw FormatError("node '" + c + "' has more than one parent");
        }
        children[p].push_back(c);
        names.insert(p);
        names.insert(c);
    }
    std::vector<std::string> roots;
    for (const auto& n : names) {
        if (!parent_of.count(n)) {
            roots.push_back(n);
        }
    }
    if (roots.empty()) {
        throw FormatError("edge list has no root (cycle)");
    }
    if (roots.size() > 1) {
        throw FormatError("edge list has multiple roots: " + roots[0] + ", " + roots[1]);
    }
    std::size_t reached = 0;
    std::function<RawNode(const std::string&)> build = [&](const std::string& name) {
        ++reached;
        RawNode node;
        node.name = name;
        const auto it = children.find(name);
        if (it != children.end()) {
            for (const auto& c : it->second) {
                node.children.push_back(build(c));
            }
        }
        return node;
    };
    RawNode root = build(roots.front());
    if (reached != names.size()) {
        throw FormatError("edge list contains a cycle detached from the root");
    }
    return root;
}

struct Builder {
    std::vector<HierarchyNode> nodes;
    std::vector<std::optional<NodeId>> requested_ids;
    bool binarized = false;

    NodeId add(HierarchyNode node, std::optional<NodeId> id) {
        nodes.push_back(std::move(node));
        requested_ids.push_back(id);
        return static_cast<NodeId>(nodes.size() - 1);
    }

    void link(NodeId parent, NodeId left, NodeId right) {
        nodes[static_cast<std::size_t>(parent)].left = left;
        nodes[static_cast<std::size_t>(parent)].right = right;
        nodes[static_cast<std::size_t>(left)].parent = parent;
        nodes[static_cast<std::size_t>(right)].parent = parent;
    }

    NodeId build(const RawNode& raw) {
        if (raw.children.empty()) {
            HierarchyNode leaf;
            leaf.class_name = raw.name;
            return add(std::move(leaf), raw.id);
        }
        if (raw.children.size() == 1) {
            binarized = true;
            return build(raw.children.front());
        }
        std::vector<NodeId> kids;
        for (const auto& c : raw.children) {
            kids.push_back(build(c));
        }
        if (kids.size() > 2) {
            binarized = true;
        }
        NodeId acc = kids[0];
        for (std::size_t i = 1; i < kids.size(); ++i) {
            const bool last = i + 1 == kids.size();
            HierarchyNode inner;
            if (last) {
                inner.merge_distance = raw.merge_distance;
            }
            const NodeId parent = add(std::move(inner), last ? raw.id : std::nullopt);
            link(parent, acc, kids[i]);
            acc = parent;
        }
        return acc;
    }
};

Hierarchy finish(Builder builder) {
    auto& nodes = builder.nodes;
    std::vector<std::string> leaves;
    for (const auto& n : nodes) {
        if (n.is_leaf()) {
            leaves.push_back(n.class_name);
        }
    }
    std::sort(leaves.begin(), leaves.end());
    if (const auto dup = std::adjacent_find(leaves.begin(), leaves.end()); dup != leaves.end()) {
        throw FormatError("duplicate leaf name '" + *dup + "'");
    }
    if (builder.binarized) {
        // Distances of a reshaped tree no longer describe its merges.
        for (auto& n : nodes) {
            n.merge_distance.reset();
        }
    }

    const std::size_t total = nodes.size();
    const std::size_t k = leaves.size();
    std::vector<NodeId> new_id(total, kNoNode);

    // Honour explicit ids when they form a valid numbering.
    bool use_requested = !builder.binarized;
    std::vector<bool> taken(total, false);
    for (std::size_t i = 0; use_requested && i < total; ++i) {
        const auto& id = builder.requested_ids[i];
        if (!id || *id < 0 || static_cast<std::size_t>(*id) >= total || taken[static_cast<std::size_t>(*id)]) {
            use_requested = false;
            break;
        }
        taken[static_cast<std::size_t>(*id)] = true;
        if (nodes[i].is_leaf() != (static_cast<std::size_t>(*id) < k)) {
            use_requested = false;
        } else if (nodes[i].is_leaf() && leaves[static_cast<std::size_t>(*id)] != nodes[i].class_name) {
            use_requested = false;
        }
    }
    if (use_requested) {
        for (std::size_t i = 0; i < total; ++i) {
            new_id[i] = *builder.requested_ids[i];
        }
    } else {
        // Leaves by sorted name; internal nodes in construction (post-)order.
        NodeId next_internal = static_cast<NodeId>(k);
        for (std::size_t i = 0; i < total; ++i) {
            if (nodes[i].is_leaf()) {
                new_id[i] = static_cast<NodeId>(std::lower_bound(leaves.begin(), leaves.end(), nodes[i].class_name) -
                                                leaves.begin());
            } else {
                new_id[i] = next_internal++;
            }
        }
    }
    std::vector<HierarchyNode> renumbered(total);
    const auto map = [&](NodeId id) { return id == kNoNode ? kNoNode : new_id[static_cast<std::size_t>(id)]; };
    for (std::size_t i = 0; i < total; ++i) {
        HierarchyNode n = nodes[i];
        n.parent = map(n.parent);
        n.left = map(n.left);
        n.right = map(n.right);
        if (!n.is_leaf()) {
            n.class_name.clear();
        }
        renumbered[static_cast<std::size_t>(new_id[i])] = std::move(n);
    }
    return Hierarchy::from_nodes(std::move(renumbered));
}

json node_to_json(const Hierarchy& h, NodeId n) {
    json j;
    const auto& node = h.node(n);
    j["name"] = node.is_leaf() ? node.class_name : "n" + std::to_string(n);
    j["id"] = n;
    if (!node.is_leaf()) {
        if (node.merge_distance) {
            j["merge_distance"] = *node.merge_distance;
        }
        j["children"] = json::array({node_to_json(h, node.left), node_to_json(h, node.right)});
    }
    return j;
}

std::string dot_escape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
        }
        out += c;
    }
    return out;
}

}  // namespace

Hierarchy parse_hierarchy(const std::string& text) {
    const std::string trimmed = trim(text);
    if (trimmed.empty()) {
        throw FormatError("empty hierarchy file");
    }
    RawNode root;
    if (trimmed.front() == '{') {
        json doc;
        try {
            doc = json::parse(trimmed);
        } catch (const json::parse_error& e) {
            throw FormatError(std::string("hierarchy JSON: ") + e.what());
        }
        root = raw_from_json(doc, 0);
    } else {
        root = raw_from_edges(trimmed);
    }
    Builder builder;
    builder.build(root);
    return finish(std::move(builder));
}

Hierarchy import_hierarchy(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArgumentError("cannot open hierarchy file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_hierarchy(buffer.str());
}

std::string export_hierarchy(const Hierarchy& h, HierarchyFormat format) {
    if (format == HierarchyFormat::json_tree) {
        return node_to_json(h, h.root()).dump(2) + "\n";
    }
    std::string out = "digraph hierarchy {\n  node [shape=box];\n";
    for (NodeId n = 0; n < static_cast<NodeId>(h.size()); ++n) {
        const auto& node = h.node(n);
        const std::string label = node.is_leaf() ? node.class_name : "n" + std::to_string(n);
        out += "  n" + std::to_string(n) + " [label=\"" + dot_escape(label) + "\"";
        if (!node.is_leaf()) {
            out += ", shape=ellipse";
        }
        out += "];\n";
    }
    for (const NodeId n : h.internal_nodes()) {
        const auto& node = h.node(n);
        for (const NodeId c : {node.left, node.right}) {
            out += "  n" + std::to_string(n) + " -> n" + std::to_string(c);
            if (node.merge_distance) {
                out += " [label=\"" + format_double(*node.merge_distance) + "\"]";
            }
            out += ";\n";
        }
    }
    out += "}\n";
    return out;
}

std::string hierarchy_fingerprint(const Hierarchy& h) {
    return hex64(fnv1a64(export_hierarchy(h, HierarchyFormat::json_tree)));
}

}  // namespace hioscar
