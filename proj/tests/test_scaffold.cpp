#include "nlat/error.hpp"
#include "nlat/scaffold.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <string>

using namespace nlat;

namespace {

ScaffoldParams unit(double eps, double alpha = 1.25)
{
    ScaffoldParams p;
    p.eps = eps;
    p.alpha = alpha;
    return p;
}

}  // namespace

TEST(Scaffold, CountsUnitBoxQuarter)
{
    Scaffold s = build_scaffold(unit(0.25));
    EXPECT_EQ(s.counts().nodes, 27u);
    for (int a = 0; a < 3; ++a) EXPECT_EQ(s.counts().connectors[a], 18u);
    EXPECT_EQ(s.counts().interior, 1u);
    EXPECT_EQ(s.counts().exposed, 26u);
    EXPECT_EQ(s.t_faces().size(), 4u * 54u);
}

TEST(Scaffold, LatticeKeepsDistanceFromBoundary)
{
    for (double eps : {0.3, 0.2, 0.15, 0.1}) {
        ScaffoldParams p = unit(eps);
        for (const Vec3& x : build_lattice(p)) {
            EXPECT_GE(p.domain.boundary_distance(x), eps - 1e-9);
            for (int k = 0; k < 3; ++k) {
                double m = x[k] / eps;
                EXPECT_NEAR(m, std::round(m), 1e-9);
            }
        }
    }
}

TEST(Scaffold, VolumeClosedForm)
{
    Scaffold s = build_scaffold(unit(0.25));
    EXPECT_NEAR(volume(s), 0.27271966334346263157, 1e-14);
}

TEST(Scaffold, ContactAreaClosedForm)
{
    Scaffold s = build_scaffold(unit(0.25));
    EXPECT_NEAR(surface_areas(s).t, 2.7959415460183915794, 1e-13);
}

TEST(Scaffold, TFaceNormalsAreTransverse)
{
    Scaffold s = build_scaffold(unit(0.2));
    for (int a = 0; a < 3; ++a) {
        Axis ax = axis_from_index(a);
        for (std::size_t i = s.t_face_begin(ax); i < s.t_face_end(ax); ++i) {
            const Face& f = s.t_faces()[i];
            EXPECT_NE(f.normal_axis, ax);
            EXPECT_EQ(f.owner_axis, ax);
        }
    }
}

TEST(Scaffold, ConnectorsJoinNeighbours)
{
    ScaffoldParams p = unit(0.2);
    Scaffold s = build_scaffold(p);
    for (int a = 0; a < 3; ++a)
        for (const Connector& c : s.connectors(axis_from_index(a))) {
            const Vec3& A = s.node_centers()[c.node_a];
            const Vec3& B = s.node_centers()[c.node_b];
            EXPECT_LT(c.node_a, c.node_b);
            EXPECT_NEAR(B[a] - A[a], p.eps, 1e-12);
            EXPECT_NEAR(c.box.extent(a), p.eps - std::pow(p.eps, p.alpha), 1e-12);
        }
}

TEST(Scaffold, ContainsClassifiesPoints)
{
    Scaffold s = build_scaffold(unit(0.25));
    EXPECT_EQ(s.contains({0.5, 0.5, 0.5}), Material::ScaffoldNode);
    EXPECT_EQ(s.contains({0.375, 0.5, 0.5}), Material::ScaffoldConnector);
    EXPECT_EQ(s.contains({0.375, 0.375, 0.5}), Material::LiquidCrystal);
}

TEST(Scaffold, Validation)
{
    EXPECT_THROW(build_scaffold(unit(0.25, 0.9)), ValidationError);
    EXPECT_THROW(build_scaffold(unit(0.25, 1.5)), ValidationError);
    EXPECT_THROW(build_scaffold(unit(1.2)), ValidationError);
    EXPECT_THROW(build_scaffold(unit(0.6)), EmptyLattice);
    ScaffoldParams p = unit(0.25);
    p.p = 0.5;
    EXPECT_THROW(build_scaffold(p), ValidationError);
}

TEST(Scaffold, ObjExport)
{
    Scaffold s = build_scaffold(unit(0.25));
    std::istringstream is(to_obj(s));
    std::string line;
    std::size_t v = 0, f = 0;
    while (std::getline(is, line)) {
        if (line.rfind("v ", 0) == 0) ++v;
        if (line.rfind("f ", 0) == 0) ++f;
    }
    EXPECT_EQ(v, (27u + 54u) * 8u);
    EXPECT_EQ(f, (27u + 54u) * 12u);
}
