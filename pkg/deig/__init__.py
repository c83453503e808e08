# DEIG desk-scale package
