import java.util.Vector;

public class VectorSwap {
    public static void swap(Vector<Integer> vector, int i, int j) {
        try {
            Integer first = vector.get(i);
            Integer second = vector.get(j);
            vector.set(i, second);
            vector.set(j, first);
        } catch (IndexOutOfBoundsException e) {
            System.out.println("Index out of bounds: " + e.getMessage());
        }
    }
}
