# sim/exporters.py
"""Exportación de trayectorias a CSV (9 cifras significativas, punto decimal)."""
import csv
from pathlib import Path

TRAJECTORY_COLUMNS = ['t', 'u_delayed', 'y', 'h1_w', 'h1_what', 'telescope_residual']
SNAPSHOT_COLUMNS = ['x', 'w', 'z']


def fmt(value):
    return format(float(value), '.9g')


def write_trajectory_csv(trajectory, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = (trajectory.times, trajectory.u_delayed, trajectory.y, trajectory.h1_w,
               trajectory.h1_what, trajectory.telescope_residual)
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(TRAJECTORY_COLUMNS)
        for row in zip(*columns):
            writer.writerow([fmt(v) for v in row])
    return path


def write_snapshots_csv(trajectory, directory):
    """Un CSV por muestra guardada: snapshot_<k>.csv con columnas x, w, z."""
    if trajectory.snapshots_w is None:
        raise ValueError("La trayectoria no guardó instantáneas.")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, (w, z) in enumerate(zip(trajectory.snapshots_w, trajectory.snapshots_z)):
        path = directory / f'snapshot_{k:05d}.csv'
        with open(path, 'w', newline='', encoding='utf-8') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(SNAPSHOT_COLUMNS)
            for row in zip(trajectory.nodes, w, z):
                writer.writerow([fmt(v) for v in row])
        paths.append(path)
    return paths
