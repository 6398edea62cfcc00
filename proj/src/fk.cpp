#include "diffik/fk.hpp"

#include <iomanip>
#include <sstream>

namespace diffik {

std::string export_global_pose(const Skeleton& skel, const GlobalPosed& pose, int precision) {
  if (pose.size() != skel.size()) throw DimensionError("export: pose does not match skeleton");
  std::ostringstream out;
  out << std::setprecision(precision);
  for (std::size_t i = 0; i < pose.size(); ++i) {
    out << skel.bone(i).name;
    for (double v : pose[i].m) out << ' ' << v;
    out << '\n';
  }
  return out.str();
}

}  // namespace diffik
