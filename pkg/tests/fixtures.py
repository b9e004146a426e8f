"""Small hand-built complexes shared by the tests."""
import numpy as np

from tricert.complex import GeometricComplex
from tricert.degree import OrientedPLMap
from tricert.meshgen import icosphere_unit


def hex_fan():
    ang = np.arange(6) * np.pi / 3
    V = np.vstack([[0, 0], np.c_[np.cos(ang), np.sin(ang)]])
    S = [[0, 1 + i, 1 + (i + 1) % 6] for i in range(6)]
    return GeometricComplex(V, S, oriented=True)


def disk_fan(k):
    ang = 2 * np.pi * np.arange(k) / k
    V = np.vstack([[0, 0], np.c_[np.cos(ang), np.sin(ang)]])
    S = [[0, 1 + i, 1 + (i + 1) % k] for i in range(k)]
    return GeometricComplex(V, S, oriented=True)


def identity_map(k=8):
    C = disk_fan(k)
    return OrientedPLMap(C, C.vertices.copy())


def angle_doubling_map(k=9):
    """Fan over the unit disk; the boundary vertex at angle a goes to angle 2a."""
    C = disk_fan(k)
    ang = 2 * np.pi * np.arange(k) / k
    img = np.vstack([[0, 0], np.c_[np.cos(2 * ang), np.sin(2 * ang)]])
    return OrientedPLMap(C, img)


def icosahedron():
    V, S = icosphere_unit(0)
    return GeometricComplex(V, S)


def bowtie():
    V = [[0, 0], [1, 0], [0, 1], [-1, 0], [0, -1]]
    return GeometricComplex(V, [[0, 1, 2], [0, 3, 4]])


def brute_signed_preimages(f, y):
    """Independent enumeration: solve each affine piece with a dense solve."""
    total, hits = 0, 0
    for top in f.source.simplices:
        P, Q = f.source.vertices[top], f.vertex_images[top]
        A = np.vstack([Q.T, np.ones(len(top))])
        lam = np.linalg.solve(A, np.append(y, 1.0))
        if lam.min() > 0:
            hits += 1
            total += int(np.sign(np.linalg.det(np.vstack([P.T, np.ones(len(top))])))
                         * np.sign(np.linalg.det(A)))
    return total, hits
