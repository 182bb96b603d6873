#pragma once

#include "nlat/geometry.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace nlat {

struct ScaffoldParams {
    double eps = 0.25;
    double alpha = 1.25;
    double p = 1.0;
    double q = 1.0;
    double r = 1.0;
    Box domain{};

    void validate() const;
    double aniso(int k) const { return k == 0 ? p : (k == 1 ? q : r); }
    // ε^α / (2·aniso(k))
    double node_half(int k) const;
    // half-extents of a connector oriented along `axis`
    Vec3 connector_half(Axis axis) const;
};

enum class Material : std::uint8_t { LiquidCrystal, ScaffoldNode, ScaffoldConnector };

const char* material_name(Material m);

// An axis-aligned rectangle on the boundary of a box; `rect` is flat along the normal axis.
struct Face {
    Box rect;
    Axis normal_axis = Axis::X;
    int sign = 1;           // outward normal is sign * e_{normal_axis}
    Axis owner_axis = Axis::X;  // for contact faces: axis of the owning connector
    std::size_t owner = 0;  // connector index within its axis, or node index

    Vec3 normal() const { return unit(normal_axis, sign); }
    double area() const;
};

struct Connector {
    std::size_t node_a = 0;  // node_a < node_b
    std::size_t node_b = 0;
    Vec3 center{};
    Box box{};
};

struct ScaffoldCounts {
    std::size_t nodes = 0;     // N_eps
    std::array<std::size_t, 3> connectors{};  // X_eps, Y_eps, Z_eps
    std::size_t interior = 0;  // nodes with all six neighbours
    std::size_t exposed = 0;   // remaining nodes
};

class Scaffold {
public:
    const ScaffoldParams& params() const { return params_; }
    const std::vector<Vec3>& node_centers() const { return node_centers_; }
    const std::vector<Box>& node_boxes() const { return node_boxes_; }
    const std::vector<Connector>& connectors(Axis a) const { return connectors_[index(a)]; }
    // Contact faces grouped by connector axis: all x-connector faces first, then y, then z.
    const std::vector<Face>& t_faces() const { return t_faces_; }
    std::size_t t_face_begin(Axis a) const { return t_begin_[index(a)]; }
    std::size_t t_face_end(Axis a) const { return t_begin_[index(a) + 1]; }
    const std::vector<Face>& s_faces() const { return s_faces_; }
    const ScaffoldCounts& counts() const { return counts_; }

    // Lattice extents in integer index space.
    const std::array<long, 3>& index_lo() const { return idx_lo_; }
    const std::array<long, 3>& index_count() const { return idx_n_; }
    std::size_t node_index(long i, long j, long k) const;  // local indices

    Material contains(const Vec3& x) const;

private:
    friend Scaffold build_scaffold(const ScaffoldParams&);

    ScaffoldParams params_;
    std::array<long, 3> idx_lo_{};
    std::array<long, 3> idx_n_{};
    std::vector<Vec3> node_centers_;
    std::vector<Box> node_boxes_;
    std::array<std::vector<Connector>, 3> connectors_;
    std::vector<Face> t_faces_;
    std::array<std::size_t, 4> t_begin_{};
    std::vector<Face> s_faces_;
    ScaffoldCounts counts_;
};

std::vector<Vec3> build_lattice(const ScaffoldParams& params);
Scaffold build_scaffold(const ScaffoldParams& params);

double volume(const Scaffold& s);

struct SurfaceAreas {
    double t = 0.0;
    double s = 0.0;
};
SurfaceAreas surface_areas(const Scaffold& s);

std::string to_obj(const Scaffold& s);
void export_obj(const Scaffold& s, const std::filesystem::path& path);
std::string summary_json(const Scaffold& s);

}  // namespace nlat
