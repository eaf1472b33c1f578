#pragma once

#include "hioscar/features.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hioscar {

using NodeId = int;
inline constexpr NodeId kNoNode = -1;

struct HierarchyNode {
    NodeId parent = kNoNode;
    NodeId left = kNoNode;
    NodeId right = kNoNode;
    std::string class_name;  // leaves only
    std::optional<double> merge_distance;

    bool is_leaf() const { return left == kNoNode; }
};

/// Strictly binary class tree. Leaves are numbered 0..K-1 in sorted
/// class-name order, so a leaf id doubles as the class index everywhere.
/// Immutable after construction.
class Hierarchy {
public:
    Hierarchy() = default;

    /// Validates shape, parent links, leaf numbering and reachability.
    static Hierarchy from_nodes(std::vector<HierarchyNode> nodes);

    std::size_t size() const { return nodes_.size(); }
    std::size_t leaf_count() const { return classes_.size(); }
    NodeId root() const { return root_; }

    const HierarchyNode& node(NodeId n) const;
    bool is_leaf(NodeId n) const { return node(n).is_leaf(); }
    NodeId parent(NodeId n) const { return node(n).parent; }
    std::pair<NodeId, NodeId> children(NodeId n) const;
    NodeId sibling(NodeId n) const;
    int depth(NodeId n) const;

    const std::vector<std::string>& classes() const { return classes_; }
    const std::string& class_name(NodeId leaf) const;
    NodeId leaf_of(const std::string& class_name) const;
    std::optional<NodeId> find_leaf(const std::string& class_name) const;

    /// Internal nodes in increasing id order.
    std::vector<NodeId> internal_nodes() const;
    /// Sorted class names of the leaves under n (n itself if a leaf).
    std::vector<std::string> leaf_classes(NodeId n) const;

    bool has_merge_distances() const { return has_merge_distances_; }
    double merge_distance(NodeId n) const;

    bool valid(NodeId n) const { return n >= 0 && static_cast<std::size_t>(n) < nodes_.size(); }
    const std::vector<HierarchyNode>& nodes() const { return nodes_; }

    friend bool operator==(const Hierarchy& a, const Hierarchy& b);

private:
    std::vector<HierarchyNode> nodes_;
    std::vector<std::string> classes_;
    std::vector<int> depth_;
    NodeId root_ = kNoNode;
    bool has_merge_distances_ = false;
};

struct ClassCentroid {
    std::string class_name;
    std::vector<double> vector;
    std::size_t count = 0;
};

std::vector<ClassCentroid> class_centroids(const std::vector<FeatureVector>& features,
                                           const std::vector<std::string>& labels);
std::vector<ClassCentroid> class_centroids(std::span<const std::vector<double>> features,
                                           const std::vector<std::string>& labels);

/// 1 - cos(a, b); throws ArgumentError on a zero vector.
double cosine_distance(std::span<const double> a, std::span<const double> b);

struct MergeStep {
    std::vector<std::string> left;   // class members, sorted
    std::vector<std::string> right;
    double distance = 0.0;
};

/// Average-linkage agglomeration under cosine distance between class centroids.
/// Ties go to the pair whose (smallest member index) keys are lexicographically
/// smallest. Internal node ids follow merge order: node K + i is merge i.
Hierarchy hac_build(const std::vector<ClassCentroid>& centroids);

/// The merges of a built hierarchy in creation order.
std::vector<MergeStep> merge_sequence(const Hierarchy& h);

/// Root-to-parent path of n (empty for the root).
std::vector<NodeId> anc(const Hierarchy& h, NodeId n);
NodeId lca(const Hierarchy& h, NodeId s, NodeId t);

/// Sum of edge weights on the tree path s -> lca -> t, where edge
/// (child, parent) weighs merge_distance(parent).
double cumulative_cosine_distance(const Hierarchy& h, NodeId s, NodeId t);

enum class HierarchyFormat { json_tree, dot };

/// Accepts a json-tree document or a "parent,child" edge list. Nodes with more
/// than two children are chained left-leaning.
Hierarchy parse_hierarchy(const std::string& text);
Hierarchy import_hierarchy(const std::filesystem::path& path);
std::string export_hierarchy(const Hierarchy& h, HierarchyFormat format);

/// Hex FNV-1a of the json-tree export.
std::string hierarchy_fingerprint(const Hierarchy& h);

}  // namespace hioscar
