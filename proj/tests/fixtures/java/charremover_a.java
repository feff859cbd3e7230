public class CharRemover {
    public static String removeCharAt(StringBuilder sb, int index) {
        sb.deleteCharAt(index);
        return sb.toString();
    }
}
