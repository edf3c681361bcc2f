NAME = "r13_mfem"
NICE_NAME = "R13 Mixed FEM"
VERSION = "0.1"
