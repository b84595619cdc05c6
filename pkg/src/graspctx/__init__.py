"""Point-cloud scene context for grasp assistance.

Classifies depth-camera scenes into grasping modes (tabletop, doorknob, pot
handle), segments the graspable objects and proposes opposition grasp points.
A simulated depth camera and IMU are included for evaluation.
"""

from ._backend import BACKEND
from .cloud import (CameraIntrinsics, DepthFrame, deproject, filter_invalid, load_cloud,
                    load_frame, store_cloud, store_frame)
from .modes import DetectedObject, DetectionParams, Mode, ModeDecision, detect_mode
from .orientation import (GravityEstimate, ImuSample, PlaneOrientation, RigidTransform,
                          classify_plane_orientation, estimate_gravity)
from .planes import (HullPrism, PlaneModel, RansacParams, contains, convex_hull, extract_planes,
                     extrude_hull, fit_plane_ransac)
from .segmentation import (Cluster, GraspEstimate, ObjectBox, cluster_in_volume,
                           detect_pot_handle, grasp_points, pca_box)

__version__ = "0.1.0"
